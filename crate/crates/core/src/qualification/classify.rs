use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classical::{default_mu_grid, estimate_classical_order, Mu0Interval};
use super::limits::{estimate_limit, log_err, LimitEstimate, LimitKind};
use super::mp::{check_mp_qualification, default_mp_a, MpVerdict};
use super::pairs::{check_order_source_pair, pair_limsups, strong_verdict, weak_verdict, PairVerdict};
use super::{check_grid, default_alpha_grid, estimator_for, require_order};
use crate::error::{Error, Result};
use crate::filters::{FilterFamily, FilterInfo};
use crate::funcdsl::{OrderLike, SourceFn, SourceLike, TabulatedSource};
use crate::numerics::{AlphaGrid, LambdaGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// Label used when optimality could not be certified for the tried `h`.
pub const NO_CERTIFICATE: &str = "no certificate found";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    None,
    Weak,
    Strong,
    Optimal,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::None => "none",
            Level::Weak => "weak",
            Level::Strong => "strong",
            Level::Optimal => "optimal",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Level::None),
            "weak" => Ok(Level::Weak),
            "strong" => Ok(Level::Strong),
            "optimal" => Ok(Level::Optimal),
            other => Err(Error::Parse(format!("unknown level `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrhoEntry {
    pub lambda: f64,
    pub estimate: LimitEstimate,
    pub stabilized: bool,
}

/// Verdicts backing the reported level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub weak: Option<PairVerdict>,
    /// Source function that made the weak pair hold.
    pub weak_source: Option<String>,
    pub strong: Option<PairVerdict>,
    pub optimal: Option<PairVerdict>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationReport {
    pub schema_version: u32,
    pub filter: FilterInfo,
    pub order: String,
    pub level: Level,
    pub srho_table: Vec<SrhoEntry>,
    pub classical_mu0: Mu0Interval,
    pub mp: MpVerdict,
    pub evidence: Evidence,
    pub alpha_grid: AlphaGrid,
    pub lambda_grid: Vec<f64>,
}

impl QualificationReport {
    pub fn all_stabilized(&self) -> bool {
        self.srho_table.iter().all(|e| e.stabilized)
    }
}

/// `liminf_{alpha -> 0} rho(alpha) / |r_alpha(lambda)|` for any order-like `rho`.
pub fn estimate_srho_dyn(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    lambda: f64,
    grid: &AlphaGrid,
) -> Result<LimitEstimate> {
    if !(lambda > 0.0) {
        return Err(Error::ParamOutOfRange {
            name: "lambda".into(),
            value: lambda,
            reason: "must be positive".into(),
        });
    }
    filter.check_lambda(lambda)?;
    check_grid(filter, grid)?;
    let cfg = estimator_for(filter, rho, grid);
    Ok(estimate_limit(
        |t| {
            let r = filter.log_residual(t, lambda);
            if r.is_zero() {
                return (f64::INFINITY, 0.0);
            }
            let lr = rho.ln_at_t(t);
            (lr - r.ln_abs, log_err(&[lr, r.ln_abs]))
        },
        LimitKind::Liminf,
        &cfg,
    ))
}

/// Estimates `s_rho(lambda)`; `rho` must be certified.
pub fn estimate_srho(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    lambda: f64,
    grid: &AlphaGrid,
) -> Result<LimitEstimate> {
    require_order(rho)?;
    estimate_srho_dyn(filter, rho, lambda, grid)
}

/// The estimated `s_rho` as a tabulated source. Infinite values are capped
/// at `cap` and vanishing ones floored at `1e-300`.
pub fn srho_source(table: &[SrhoEntry], cap: Option<f64>) -> Result<TabulatedSource> {
    let lambdas: Vec<f64> = table.iter().map(|e| e.lambda).collect();
    let values: Vec<f64> = table
        .iter()
        .map(|e| {
            let v = if e.estimate.unbounded() { f64::INFINITY } else { e.estimate.value };
            let v = match cap {
                Some(c) => v.min(c),
                None => v,
            };
            v.max(1e-300)
        })
        .collect();
    let label = match cap {
        Some(c) => format!("min(s_rho_hat, {c})"),
        None => "s_rho_hat".to_string(),
    };
    TabulatedSource::new(&label, lambdas, &values)
}

/// Bounded candidate sources tried for the weak level after the capped
/// estimate.
pub fn candidate_sources() -> Vec<SourceFn> {
    ["lambda", "lambda^0.5", "lambda/(1+lambda)"]
        .iter()
        .map(|s| SourceFn::parse(s).expect("catalog source"))
        .collect()
}

/// Classifies `rho` on the standard grids for `filter`.
pub fn classify(filter: &FilterFamily, rho: &dyn OrderLike) -> Result<QualificationReport> {
    classify_with(filter, rho, &LambdaGrid::standard(), &default_alpha_grid(filter))
}

/// Classifies `rho`: `s_rho` table, level with evidence, `mu_0` bracket and
/// the Mathé-Pereverzev verdict.
pub fn classify_with(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<QualificationReport> {
    require_order(rho)?;
    check_grid(filter, grid)?;
    let lgrid = lambdas.clipped_below(filter.lambda_limit());
    let lams = lgrid.positive();
    if lams.is_empty() {
        return Err(Error::InvalidGrid("no admissible positive lambda".into()));
    }
    let srho_table: Vec<SrhoEntry> = lams
        .par_iter()
        .map(|&l| {
            estimate_srho_dyn(filter, rho, l, grid).map(|e| SrhoEntry {
                lambda: l,
                stabilized: e.stabilized,
                estimate: e,
            })
        })
        .collect::<Result<_>>()?;
    let strong_by_srho = srho_table.iter().all(|e| e.estimate.is_positive_finite());

    let mut evidence = Evidence {
        weak: None,
        weak_source: None,
        strong: None,
        optimal: None,
        note: None,
    };
    let mut level = Level::None;
    if strong_by_srho {
        let s_hat = srho_source(&srho_table, None)?;
        let samples = pair_limsups(filter, &s_hat, rho, &lams, grid)?;
        let strong = strong_verdict(samples.clone());
        let weak = weak_verdict(samples);
        evidence.weak = Some(weak);
        evidence.weak_source = Some(s_hat.describe());
        evidence.strong = Some(strong);
        level = Level::Strong;
        let opt = check_order_source_pair(filter, rho, &s_hat, None, &lgrid, grid)?;
        if opt.holds {
            level = Level::Optimal;
        } else {
            evidence.note = Some(NO_CERTIFICATE.into());
        }
        evidence.optimal = Some(opt);
    } else {
        let capped = srho_source(&srho_table, Some(1.0))?;
        let mut sources: Vec<Box<dyn SourceLike>> = vec![Box::new(capped)];
        for s in candidate_sources() {
            sources.push(Box::new(s));
        }
        for s in &sources {
            let v = weak_verdict(pair_limsups(filter, s.as_ref(), rho, &lams, grid)?);
            let holds = v.holds;
            if evidence.weak.is_none() || holds {
                evidence.weak = Some(v);
                evidence.weak_source = Some(s.describe());
            }
            if holds {
                level = Level::Weak;
                break;
            }
        }
    }

    let classical_mu0 = estimate_classical_order(filter, &default_mu_grid(), &lgrid, grid)?;
    let mp = check_mp_qualification(filter, rho, default_mp_a(filter), grid)?;
    Ok(QualificationReport {
        schema_version: SCHEMA_VERSION,
        filter: filter.info(),
        order: rho.describe(),
        level,
        srho_table,
        classical_mu0,
        mp,
        evidence,
        alpha_grid: *grid,
        lambda_grid: lams,
    })
}
