use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::{OrderLike, SourceFn, SourceLike};
use crate::numerics::LambdaGrid;
use crate::operators::{membership_probe, CoefVector, Membership, SpectralModel};
use crate::qualification::{
    check_strong_pair, classify_with, default_alpha_grid, ext, srho_source, Level, PairVerdict, QualificationReport,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementCheck {
    pub generator: String,
    pub membership: Membership,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub source: String,
    pub strong_pair: PairVerdict,
    /// `max_j s(lambda_j) / s_rho(lambda_j)` when the pair is strong.
    #[serde(with = "ext::opt")]
    pub k: Option<f64>,
    pub elements: Vec<ElementCheck>,
    /// Strong pair and every sampled element lies in the `s_rho` source set.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub qualification: QualificationReport,
    pub candidates: Vec<CandidateReport>,
}

/// Generators `w` sampling the source set `{s(T*T) w}`.
pub fn default_generators(dim: usize) -> Vec<(String, CoefVector)> {
    let alt = CoefVector(
        (1..=dim)
            .map(|j| if j % 2 == 0 { -1.0 } else { 1.0 } * (j as f64).powf(-0.6))
            .collect(),
    );
    vec![
        ("j^-0.6".into(), CoefVector::default_generator(dim)),
        ("j^-1".into(), CoefVector::power(dim, -1.0)),
        ("(-1)^(j+1) j^-0.6".into(), alt),
        ("e_1".into(), CoefVector::unit(dim, 0)),
    ]
}

/// Checks `R(s(T*T))` inside `R(s_rho(T*T))` on the model for each
/// candidate forming a strong pair with `rho`.
pub fn maximal_source_demo(
    model: &SpectralModel,
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    candidates: &[SourceFn],
) -> Result<MaximalReport> {
    let grid = default_alpha_grid(filter);
    let top = match filter.lambda_limit() {
        Some(l) => model.lambda_max().min(l * 0.999),
        None => model.lambda_max(),
    };
    let lambdas = LambdaGrid::geometric(model.lambda_min(), top, 2)?;
    let qualification = classify_with(filter, rho, &lambdas, &grid)?;
    if qualification.level < Level::Strong {
        return Err(Error::Precondition(format!(
            "qualification level is {}, need at least strong",
            qualification.level.as_str()
        )));
    }
    let srho = srho_source(&qualification.srho_table, None)?;
    let gens = default_generators(model.dim);
    let mut out = Vec::with_capacity(candidates.len());
    for s in candidates {
        let strong_pair = check_strong_pair(filter, s, rho, &LambdaGrid::standard(), &grid)?;
        let (k, elements) = if strong_pair.holds {
            let k = model
                .eigenvalues
                .iter()
                .map(|&l| (s.ln_s(l) - srho.ln_s(l)).exp())
                .fold(0.0, f64::max);
            let mut el = Vec::with_capacity(gens.len());
            for (name, w) in &gens {
                let x = CoefVector(
                    model
                        .eigenvalues
                        .iter()
                        .zip(&w.0)
                        .map(|(&l, &wj)| if wj == 0.0 { 0.0 } else { s.value(l) * wj })
                        .collect(),
                );
                el.push(ElementCheck {
                    generator: name.clone(),
                    membership: membership_probe(model, &x, &srho)?,
                });
            }
            (Some(k), el)
        } else {
            (None, Vec::new())
        };
        let included = strong_pair.holds && elements.iter().all(|e| e.membership.is_inside());
        out.push(CandidateReport {
            source: s.describe(),
            strong_pair,
            k,
            elements,
            included,
        });
    }
    Ok(MaximalReport {
        qualification,
        candidates: out,
    })
}
