use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairs::{PairVerdict, PairWitness};
use super::{check_grid, ext, require_order};
use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::OrderLike;
use crate::numerics::{geomspace, golden_min, ln_cap, median, AlphaGrid, LambdaGrid};

/// Relative slack of the companion bound.
pub const COMPANION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpDetail {
    Gamma(#[serde(with = "ext")] f64),
    Witness {
        alpha: f64,
        #[serde(with = "ext")]
        ratio: f64,
    },
}

/// Outcome of the Mathé-Pereverzev check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpVerdict {
    pub passes: bool,
    pub gamma_or_witness: MpDetail,
    /// `a` used as the upper end of the λ range.
    pub a: f64,
    pub max_ln_ratio: f64,
    pub median_ln_ratio: f64,
}

fn sup_ln(filter: &FilterFamily, rho: &dyn OrderLike, t: f64, a: f64) -> f64 {
    let f = |l: f64| -> f64 {
        let r = filter.log_residual(t, l);
        let v = r.ln_abs + rho.ln_at_t(l.ln());
        if v.is_nan() || v == f64::INFINITY {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let ls = geomspace(a * 1e-12, a, 16);
    let vals: Vec<f64> = ls.iter().map(|&l| f(l)).collect();
    let mut i = 0;
    for j in 1..vals.len() {
        if vals[j] > vals[i] {
            i = j;
        }
    }
    let lo = ls[i.saturating_sub(1)].ln();
    let hi = ls[(i + 1).min(ls.len() - 1)].ln();
    let (_, fx) = golden_min(|u| -f(u.exp()), lo, hi, 80);
    vals[i].max(-fx)
}

/// `sup_{lambda in (0, a]} |r_alpha(lambda)| rho(lambda) <= gamma rho(alpha)`.
///
/// The supremum is sampled at 16 points per decade over `[a 1e-12, a]` and
/// refined around the maximum. The check passes when the ratio to
/// `rho(alpha)` stays below the cap and within 100 times its grid median.
/// `alpha0`, kept below the eigenvalue limit when the family has one.
pub fn default_mp_a(filter: &FilterFamily) -> f64 {
    match filter.lambda_limit() {
        Some(l) => filter.alpha_max.min(l * 0.999),
        None => filter.alpha_max,
    }
}

pub fn check_mp_qualification(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    a: f64,
    grid: &AlphaGrid,
) -> Result<MpVerdict> {
    require_order(rho)?;
    check_grid(filter, grid)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::ParamOutOfRange {
            name: "a".into(),
            value: a,
            reason: "must be positive".into(),
        });
    }
    if let Some(limit) = filter.lambda_limit() {
        if a >= limit {
            return Err(Error::LambdaRange { lambda: a, limit });
        }
    }
    let ts = grid.ln_points();
    let ratios: Vec<f64> = ts
        .par_iter()
        .map(|&t| sup_ln(filter, rho, t, a) - rho.ln_at_t(t))
        .collect();
    let med = median(&ratios).unwrap_or(f64::NAN);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let thresh = med + 100f64.ln();
    let passes = max <= ln_cap() && max <= thresh;
    let detail = if passes {
        MpDetail::Gamma(max.exp())
    } else {
        let i = ratios
            .iter()
            .position(|r| *r > thresh || r.is_nan())
            .unwrap_or_else(|| ratios.iter().position(|r| *r == max).unwrap_or(0));
        MpDetail::Witness {
            alpha: ts[i].exp(),
            ratio: ratios[i].exp(),
        }
    };
    Ok(MpVerdict {
        passes,
        gamma_or_witness: detail,
        a,
        max_ln_ratio: max,
        median_ln_ratio: med,
    })
}

/// Checks `sup_{lambda >= h(alpha)} |r_alpha(lambda)| <= rho(alpha)` on the
/// grid, the sufficient condition for `rho` to be a weak qualification.
/// `h` defaults to `sqrt(alpha)`.
pub fn check_companion(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    h: Option<&dyn OrderLike>,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<PairVerdict> {
    require_order(rho)?;
    check_grid(filter, grid)?;
    let pos = lambdas.clipped_below(filter.lambda_limit()).positive();
    if pos.is_empty() {
        return Err(Error::InvalidGrid("no admissible positive lambda".into()));
    }
    let lmax = pos[pos.len() - 1];
    let h_at = |t: f64| match h {
        Some(h) => h.ln_at_t(t).exp(),
        None => (0.5 * t).exp(),
    };
    let rows: Vec<(f64, f64, f64)> = grid
        .ln_points()
        .par_iter()
        .map(|&t| {
            let ha = h_at(t);
            let mut sup = f64::NEG_INFINITY;
            let mut at = ha;
            if ha <= lmax {
                let mut ls = geomspace(ha, lmax, 16);
                ls.extend(pos.iter().cloned().filter(|l| *l > ha));
                for l in ls {
                    let v = filter.log_residual(t, l).ln_abs;
                    if v > sup {
                        sup = v;
                        at = l;
                    }
                }
            }
            (t, sup - rho.ln_at_t(t), at)
        })
        .collect();
    let slack = COMPANION_TOL.ln_1p();
    let witnesses: Vec<PairWitness> = rows
        .iter()
        .filter(|(_, d, _)| !(*d <= slack))
        .map(|&(t, d, l)| PairWitness {
            alpha: t.exp(),
            ln_alpha: t,
            lambda: l,
            value: d.exp(),
        })
        .take(8)
        .collect();
    let holds = witnesses.is_empty();
    let worst = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(PairVerdict {
        holds,
        bound_k: Some(worst.exp()),
        gamma: None,
        h_used: Some(match h {
            Some(h) => h.describe(),
            None => "sqrt(alpha)".into(),
        }),
        witnesses,
        samples: Vec::new(),
    })
}
