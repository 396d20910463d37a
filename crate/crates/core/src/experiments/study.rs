use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{FilterFamily, FilterInfo};
use crate::funcdsl::OrderLike;
use crate::numerics::AlphaGrid;
use crate::operators::{log_regularization_error, CoefVector, SourceElement, SpectralModel};
use crate::qualification::{check_grid, ext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub alpha: f64,
    pub err: f64,
    #[serde(with = "ext")]
    pub rho: f64,
    /// `err / rho(alpha)`, formed in the log domain.
    #[serde(with = "ext")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyContext {
    pub filter: FilterInfo,
    pub order: String,
    pub source: String,
    pub model: SpectralModel,
    pub x_dagger: CoefVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub context: StudyContext,
    pub alpha_grid: AlphaGrid,
    /// Descending in α.
    pub records: Vec<StudyRecord>,
}

/// `alpha0 / 2` down to `1e-7`, 16 points per decade.
pub fn default_study_grid(filter: &FilterFamily) -> AlphaGrid {
    AlphaGrid {
        alpha_min: 1e-7,
        alpha_max: filter.alpha_max / 2.0,
        per_decade: 16,
    }
}

fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:e}")
    }
}

impl ConvergenceStudy {
    /// Columns `alpha,err,rho,ratio`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["alpha", "err", "rho", "ratio"]).map_err(io)?;
        for r in &self.records {
            w.write_record([fmt_real(r.alpha), fmt_real(r.err), fmt_real(r.rho), fmt_real(r.ratio)])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn alpha_range(&self) -> (f64, f64) {
        let n = self.records.len();
        (self.records[n - 1].alpha, self.records[0].alpha)
    }
}

/// One record per grid α with `err = ||r_alpha(T*T) x_dagger||`.
pub fn run_convergence(
    model: &SpectralModel,
    filter: &FilterFamily,
    source: &SourceElement,
    rho: &dyn OrderLike,
    grid: &AlphaGrid,
) -> Result<ConvergenceStudy> {
    if !rho.certified() {
        return Err(Error::Uncertified(rho.describe()));
    }
    check_grid(filter, grid)?;
    let ts = grid.ln_points();
    let records: Vec<StudyRecord> = ts
        .par_iter()
        .map(|&t| {
            let alpha = t.exp();
            let le = log_regularization_error(model, filter, alpha, source)?;
            let lr = rho.ln_at_t(t);
            let ratio = if le == f64::NEG_INFINITY { 0.0 } else { (le - lr).exp() };
            Ok(StudyRecord {
                alpha,
                err: le.exp(),
                rho: lr.exp(),
                ratio,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ConvergenceStudy {
        context: StudyContext {
            filter: filter.info(),
            order: rho.describe(),
            source: source.source_s.expr.to_string(),
            model: model.clone(),
            x_dagger: source.x_dagger.clone(),
        },
        alpha_grid: *grid,
        records,
    })
}
