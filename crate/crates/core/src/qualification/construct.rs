//! Constructive weak qualification for monotone residuals.
//!
//! With `theta(lambda)` the largest γ such that `r_alpha(lambda) <= lambda`
//! for all `alpha < gamma`, `f = (1 - e^{-lambda}) theta` is inverted to `h`,
//! and the running maximum of `z(alpha) = r_alpha(h(alpha))` gives `rho*`
//! satisfying `sup_{lambda >= h(alpha)} |r_alpha(lambda)| <= rho*(alpha)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_grid;
use super::mp::check_companion;
use super::pairs::PairVerdict;
use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::TabulatedOrder;
use crate::numerics::{geomspace, loglog_interp, AlphaGrid, LambdaGrid};

const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub lambda: f64,
    pub theta: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructResult {
    pub theta: Vec<ThetaRow>,
    /// `h` tabulated as `(ln alpha, ln h(alpha))`.
    pub h: TabulatedOrder,
    pub rho_star: TabulatedOrder,
    pub certificate: PairVerdict,
}

/// `1e-8` up to 10 (or just below the admissible limit), 16 per decade.
pub fn default_construct_lambdas(filter: &FilterFamily) -> LambdaGrid {
    let top = match filter.lambda_limit() {
        Some(l) => (l * 0.999).min(10.0),
        None => 10.0,
    };
    LambdaGrid {
        values: geomspace(1e-8, top, 16),
    }
}

fn check_hypotheses(filter: &FilterFamily, ts: &[f64], lams: &[f64]) -> Result<()> {
    let viol = |t: f64, l: f64, what: &str| Error::Hypothesis {
        alpha: t.exp(),
        lambda: l,
        what: what.into(),
    };
    for &t in ts {
        let mut prev = f64::INFINITY;
        for &l in lams {
            let r = filter.log_residual(t, l);
            if r.is_nan() || r.sign <= 0 {
                return Err(viol(t, l, "residual is not positive"));
            }
            if r.ln_abs > prev + 1e-12 * prev.abs().max(1.0) {
                return Err(viol(t, l, "residual increases in lambda"));
            }
            prev = r.ln_abs;
        }
    }
    for &l in lams {
        let mut prev = f64::INFINITY;
        for &t in ts {
            let g = filter.g_raw(t.exp(), l);
            if g > prev * (1.0 + 1e-12) + 1e-300 {
                return Err(viol(t, l, "g increases in alpha"));
            }
            prev = g;
        }
    }
    Ok(())
}

fn theta(filter: &FilterFamily, lambda: f64, ts: &[f64], t_top: f64) -> Result<f64> {
    let ll = lambda.ln();
    let pred = |t: f64| {
        let r = filter.log_residual(t, lambda);
        !r.is_nan() && r.ln_abs <= ll
    };
    let (mut lo, mut hi) = match ts.iter().position(|&t| !pred(t)) {
        None => {
            if pred(t_top) {
                return Ok(t_top.exp());
            }
            (ts[ts.len() - 1], t_top)
        }
        Some(0) => {
            let floor = filter.min_log_alpha();
            let mut hi = ts[0];
            let mut t = ts[0].min(-1.0) * 2.0;
            loop {
                if t < floor {
                    return Err(Error::Bisection(lambda));
                }
                if pred(t) {
                    break (t, hi);
                }
                hi = t;
                t *= 2.0;
            }
        }
        Some(i) => (ts[i - 1], ts[i]),
    };
    for _ in 0..400 {
        if hi - lo <= BISECTION_TOL {
            return Ok(lo.exp());
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Bisection(lambda))
}

// Removes isolated jumps (an increment over ten times both neighbours),
// then forces strict increase.
fn regularize_f(f: &mut [f64]) {
    let n = f.len();
    if n < 3 {
        return;
    }
    let mut d: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
    for i in 0..d.len() {
        let left = if i > 0 { d[i - 1] } else { 0.0 };
        let right = if i + 1 < d.len() { d[i + 1] } else { 0.0 };
        let nb = left.max(right);
        if nb > 0.0 && d[i] > 10.0 * nb {
            d[i] = nb;
        }
    }
    for i in 0..d.len() {
        let base = f[i];
        let step = d[i].max(base.abs() * 1e-12).max(f64::MIN_POSITIVE);
        f[i + 1] = base + step;
    }
}

/// Builds `(h, rho*)` from the filter as in the constructive proof and
/// verifies the resulting bound on the grids.
///
/// Requires a positive residual nonincreasing in λ and `g` nonincreasing in
/// α on the grids; otherwise fails with the first violating point.
pub fn construct_weak_qualification(
    filter: &FilterFamily,
    lambdas: &LambdaGrid,
    grid: &AlphaGrid,
) -> Result<ConstructResult> {
    check_grid(filter, grid)?;
    let lams = lambdas.clipped_below(filter.lambda_limit()).positive();
    if lams.len() < 2 {
        return Err(Error::InvalidGrid("need at least two admissible positive lambdas".into()));
    }
    let mut ts = grid.ln_points();
    ts.reverse();
    check_hypotheses(filter, &ts, &lams)?;

    let t_top = if filter.id == "ex10_osc" {
        (filter.alpha_max.min(1.0) * (1.0 - 1e-12)).ln()
    } else {
        filter.alpha_max.ln()
    };
    let thetas: Vec<f64> = lams
        .par_iter()
        .map(|&l| theta(filter, l, &ts, t_top))
        .collect::<Result<_>>()?;
    let mut f: Vec<f64> = lams
        .iter()
        .zip(&thetas)
        .map(|(&l, &th)| -(-l).exp_m1() * th)
        .collect();
    regularize_f(&mut f);
    let theta_rows: Vec<ThetaRow> = lams
        .iter()
        .zip(&thetas)
        .zip(&f)
        .map(|((&lambda, &theta), &f)| ThetaRow { lambda, theta, f })
        .collect();
    let ln_l: Vec<f64> = lams.iter().map(|l| l.ln()).collect();

    let mut h_pts = Vec::with_capacity(ts.len());
    let mut rho_pts = Vec::with_capacity(ts.len());
    let mut run = f64::NEG_INFINITY;
    for &t in &ts {
        let ln_h = loglog_interp(&f, &ln_l, t.exp());
        let z = filter.log_residual(t, ln_h.exp()).ln_abs;
        run = run.max(z);
        h_pts.push((t, ln_h));
        rho_pts.push((t, run));
    }
    let h = TabulatedOrder::new("h = f^-1", h_pts)?;
    let rho_star = TabulatedOrder::new("rho* = running max of r_alpha(h(alpha))", rho_pts)?;
    let certificate = check_companion(filter, &rho_star, Some(&h), lambdas, grid)?;
    Ok(ConstructResult {
        theta: theta_rows,
        h,
        rho_star,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jump_is_flattened() {
        let mut f = vec![1.0, 2.0, 3.0, 100.0, 101.0, 102.0];
        regularize_f(&mut f);
        assert_eq!(f, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut g = vec![1.0, 1.0, 1.0];
        regularize_f(&mut g);
        assert!(g[1] > g[0] && g[2] > g[1]);
    }
}
