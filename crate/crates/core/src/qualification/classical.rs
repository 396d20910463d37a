use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_grid;
use super::limits::{estimate_limit, log_err, EstimatorConfig, LimitKind};
use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::numerics::{AlphaGrid, LambdaGrid};

/// One tested exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuTest {
    pub mu: f64,
    pub bounded: bool,
    /// First λ where `lambda^mu |r| / alpha^mu` was found unbounded.
    pub failing_lambda: Option<f64>,
}

/// Bracket for the classical order `mu_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu0Interval {
    /// Largest passing μ.
    pub low: Option<f64>,
    /// Smallest failing μ.
    pub high: Option<f64>,
    /// The smallest tested μ already fails.
    pub zero: bool,
    /// The largest tested μ still passes.
    pub infinite: bool,
    pub tested: Vec<MuTest>,
}

impl Mu0Interval {
    /// True when `mu` lies in `[low, high)`.
    pub fn brackets(&self, mu: f64) -> bool {
        match (self.low, self.high) {
            (Some(lo), Some(hi)) => lo <= mu && mu < hi,
            (Some(lo), None) => lo <= mu,
            (None, Some(hi)) => mu < hi,
            (None, None) => false,
        }
    }
}

/// `2^j` for `j = -6..=6`.
pub fn default_mu_grid() -> Vec<f64> {
    (-6..=6).map(|j| 2f64.powi(j)).collect()
}

/// Brackets `mu_0` by testing boundedness of `lambda^mu |r_alpha| / alpha^mu`.
pub fn estimate_classical_order(
    filter: &FilterFamily,
    mu_grid: &[f64],
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<Mu0Interval> {
    check_grid(filter, grid)?;
    if mu_grid.is_empty() || mu_grid.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
        return Err(Error::InvalidGrid("mu grid must be non-empty and positive".into()));
    }
    if mu_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("mu grid must be increasing".into()));
    }
    let lams: Vec<f64> = lambdas
        .clipped_below(filter.lambda_limit())
        .positive();
    if lams.is_empty() {
        return Err(Error::InvalidGrid("no admissible positive lambda".into()));
    }
    let cfg = EstimatorConfig::new(*grid, filter.min_log_alpha(), filter.oscillatory);
    let jobs: Vec<(f64, f64)> = mu_grid
        .iter()
        .flat_map(|&m| lams.iter().map(move |&l| (m, l)))
        .collect();
    let unbounded: Vec<bool> = jobs
        .par_iter()
        .map(|&(mu, l)| {
            let ml = mu * l.ln();
            estimate_limit(
                |t| {
                    let r = filter.log_residual(t, l);
                    if r.is_zero() {
                        return (f64::NEG_INFINITY, 0.0);
                    }
                    (ml + r.ln_abs - mu * t, log_err(&[ml, r.ln_abs, mu * t]))
                },
                LimitKind::Limsup,
                &cfg,
            )
            .unbounded()
        })
        .collect();
    let tested: Vec<MuTest> = mu_grid
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let row = &unbounded[i * lams.len()..(i + 1) * lams.len()];
            let failing = row.iter().position(|u| *u).map(|j| lams[j]);
            MuTest {
                mu,
                bounded: failing.is_none(),
                failing_lambda: failing,
            }
        })
        .collect();
    let high = tested.iter().find(|t| !t.bounded).map(|t| t.mu);
    let low = tested
        .iter()
        .filter(|t| t.bounded && high.is_none_or(|h| t.mu < h))
        .map(|t| t.mu)
        .next_back();
    Ok(Mu0Interval {
        low,
        high,
        zero: !tested[0].bounded,
        infinite: tested[tested.len() - 1].bounded,
        tested,
    })
}
