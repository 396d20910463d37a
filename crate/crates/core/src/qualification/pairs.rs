use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::limits::{estimate_limit, log_err, LimitEstimate, LimitKind};
use super::{check_grid, estimator_for, ext, require_order, require_source};
use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::{OrderLike, SourceLike};
use crate::numerics::{geomspace, golden_min, ln_floor, AlphaGrid, LambdaGrid, FLOOR};

/// A counterexample point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub alpha: f64,
    pub ln_alpha: f64,
    pub lambda: f64,
    #[serde(with = "ext")]
    pub value: f64,
}

/// Per-λ limsup behind a weak or strong verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub lambda: f64,
    pub estimate: LimitEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub holds: bool,
    #[serde(with = "ext::opt")]
    pub bound_k: Option<f64>,
    #[serde(with = "ext::opt")]
    pub gamma: Option<f64>,
    pub h_used: Option<String>,
    pub witnesses: Vec<PairWitness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<PairSample>,
}

fn witness_of(lambda: f64, e: &LimitEstimate) -> PairWitness {
    PairWitness {
        alpha: e.ln_alpha_at.exp(),
        ln_alpha: e.ln_alpha_at,
        lambda,
        value: e.value,
    }
}

/// Limsup of `s(lambda) |r_alpha(lambda)| / rho(alpha)` at each positive λ.
pub fn pair_limsups(
    filter: &FilterFamily,
    s: &dyn SourceLike,
    rho: &dyn OrderLike,
    lambdas: &[f64],
    grid: &AlphaGrid,
) -> Result<Vec<PairSample>> {
    check_grid(filter, grid)?;
    let lambdas: Vec<f64> = lambdas.iter().cloned().filter(|l| *l > 0.0).collect();
    for &l in &lambdas {
        filter.check_lambda(l)?;
    }
    let cfg = estimator_for(filter, rho, grid);
    Ok(lambdas
        .par_iter()
        .map(|&l| {
            let ls = s.ln_s(l);
            let est = estimate_limit(
                |t| {
                    let r = filter.log_residual(t, l);
                    if r.is_zero() {
                        return (f64::NEG_INFINITY, 0.0);
                    }
                    let lr = rho.ln_at_t(t);
                    (ls + r.ln_abs - lr, log_err(&[ls, r.ln_abs, lr]))
                },
                LimitKind::Limsup,
                &cfg,
            );
            PairSample { lambda: l, estimate: est }
        })
        .collect())
}

/// Weak verdict from per-λ limsups: every limsup bounded.
pub fn weak_verdict(samples: Vec<PairSample>) -> PairVerdict {
    let witnesses: Vec<PairWitness> = samples
        .iter()
        .filter(|p| p.estimate.unbounded())
        .map(|p| witness_of(p.lambda, &p.estimate))
        .collect();
    let holds = witnesses.is_empty();
    let bound_k = if holds {
        Some(samples.iter().map(|p| p.estimate.tail_max).fold(0.0, f64::max))
    } else {
        None
    };
    PairVerdict {
        holds,
        bound_k,
        gamma: None,
        h_used: None,
        witnesses,
        samples,
    }
}

/// Strong verdict: weak, and no limsup vanishes.
pub fn strong_verdict(samples: Vec<PairSample>) -> PairVerdict {
    let mut v = weak_verdict(samples);
    if !v.holds {
        return v;
    }
    v.witnesses = v
        .samples
        .iter()
        .filter(|p| p.estimate.vanishes() || !(p.estimate.value >= FLOOR))
        .map(|p| witness_of(p.lambda, &p.estimate))
        .collect();
    v.holds = v.witnesses.is_empty();
    if !v.holds {
        v.bound_k = None;
    }
    v
}

/// `s(lambda) |r_alpha(lambda)| / rho(alpha) = O(1)` for every sampled λ.
pub fn check_weak_pair(
    filter: &FilterFamily,
    s: &dyn SourceLike,
    rho: &dyn OrderLike,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<PairVerdict> {
    require_source(s)?;
    require_order(rho)?;
    Ok(weak_verdict(pair_limsups(filter, s, rho, &lambdas.values, grid)?))
}

/// Weak pair whose limsup is positive at every sampled λ.
pub fn check_strong_pair(
    filter: &FilterFamily,
    s: &dyn SourceLike,
    rho: &dyn OrderLike,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<PairVerdict> {
    require_source(s)?;
    require_order(rho)?;
    Ok(strong_verdict(pair_limsups(filter, s, rho, &lambdas.values, grid)?))
}

struct Scan {
    sampled: f64,
    best: f64,
    at_t: f64,
    at_lambda: f64,
}

#[allow(clippy::too_many_arguments)]
fn scan(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    s: &dyn SourceLike,
    h: &(dyn Fn(f64) -> f64 + Sync),
    grid_lambdas: &[f64],
    lam_max: f64,
    alphas: &AlphaGrid,
    lam_pd: usize,
    refine: bool,
) -> Scan {
    let stat = |t: f64, lr: f64, l: f64| -> f64 {
        let r = filter.log_residual(t, l);
        let v = s.ln_s(l) + r.ln_abs - lr;
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let per_alpha: Vec<(f64, f64, f64, f64)> = alphas
        .ln_points()
        .par_iter()
        .map(|&t| {
            let lr = rho.ln_at_t(t);
            let ha = h(t);
            let mut ls = geomspace(ha, lam_max, lam_pd);
            ls.extend(grid_lambdas.iter().cloned().filter(|l| *l > ha && *l <= lam_max));
            ls.sort_by(|a, b| a.total_cmp(b));
            ls.dedup();
            let vals: Vec<f64> = ls.iter().map(|&l| stat(t, lr, l)).collect();
            let mut i = 0;
            for j in 1..vals.len() {
                if vals[j] < vals[i] {
                    i = j;
                }
            }
            let sampled = vals[i];
            let (mut best, mut at) = (sampled, ls[i]);
            if refine && ls.len() > 1 {
                let lo = ls[i.saturating_sub(1)].ln();
                let hi = ls[(i + 1).min(ls.len() - 1)].ln();
                let (x, fx) = golden_min(|u| stat(t, lr, u.exp()), lo, hi, 80);
                if fx < best {
                    best = fx;
                    at = x.exp();
                }
            }
            (sampled, best, t, at)
        })
        .collect();
    let mut out = Scan {
        sampled: f64::INFINITY,
        best: f64::INFINITY,
        at_t: f64::NAN,
        at_lambda: f64::NAN,
    };
    for (sampled, best, t, l) in per_alpha {
        out.sampled = out.sampled.min(sampled);
        if best < out.best || out.at_t.is_nan() {
            out.best = best;
            out.at_t = t;
            out.at_lambda = l;
        }
    }
    out
}

/// `s(lambda) |r_alpha(lambda)| >= gamma rho(alpha)` for `lambda >= h(alpha)`.
///
/// The infimum is sampled on the grid and on a dense λ sweep per α, then
/// resampled at four times the density with golden-section refinement of
/// each minimum. The pair holds when the refined infimum stays above the
/// positivity floor and within a factor 2 of the coarse one. `h` defaults
/// to `rho` clamped into the λ range.
pub fn check_order_source_pair(
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    s: &dyn SourceLike,
    h: Option<&dyn OrderLike>,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<PairVerdict> {
    require_order(rho)?;
    require_source(s)?;
    check_grid(filter, grid)?;
    let pos: Vec<f64> = lambdas
        .clipped_below(filter.lambda_limit())
        .positive();
    if pos.is_empty() {
        return Err(Error::InvalidGrid("no admissible positive lambda".into()));
    }
    let (lmin, lmax) = (pos[0], pos[pos.len() - 1]);
    let h_fn = |t: f64| -> f64 {
        let v = match h {
            Some(h) => h.ln_at_t(t).exp(),
            None => rho.ln_at_t(t).exp(),
        };
        if v.is_nan() {
            lmin
        } else {
            v.clamp(lmin, lmax)
        }
    };
    let h_used = match h {
        Some(h) => format!("clamp({}, [{lmin}, {lmax}])", h.describe()),
        None => format!("clamp({}, [{lmin}, {lmax}])", rho.describe()),
    };
    let coarse = scan(filter, rho, s, &h_fn, &pos, lmax, grid, 16, false);
    let fine_grid = AlphaGrid {
        per_decade: grid.per_decade * 4,
        ..*grid
    };
    let fine = scan(filter, rho, s, &h_fn, &pos, lmax, &fine_grid, 64, true);
    let gamma = fine.best.min(coarse.sampled);
    let holds = gamma > ln_floor() && gamma >= coarse.sampled - std::f64::consts::LN_2;
    let witnesses = if holds {
        Vec::new()
    } else {
        vec![PairWitness {
            alpha: fine.at_t.exp(),
            ln_alpha: fine.at_t,
            lambda: fine.at_lambda,
            value: fine.best.exp(),
        }]
    };
    Ok(PairVerdict {
        holds,
        bound_k: None,
        gamma: Some(gamma.exp()),
        h_used: Some(h_used),
        witnesses,
        samples: Vec::new(),
    })
}
