use serde::{Deserialize, Serialize};

use super::certify::{deep_log_points, OrderLike, SourceLike};
use crate::numerics::{median, AlphaGrid, LambdaGrid};

/// Ratio growth between the grid median and the origin end that counts
/// as unbounded.
pub const DIVERGENCE_FACTOR: f64 = 100.0;

/// Outcome of "rho1 precedes rho2 at the origin".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Precedence {
    /// The ratio stays bounded; `c` is its maximum over the tail.
    Holds { c: f64 },
    /// The ratio grows; `at` is the first abscissa past the threshold and
    /// `ln_at` its logarithm (useful when `at` underflows).
    Fails { at: f64, ln_at: f64 },
}

impl Precedence {
    pub fn holds(&self) -> bool {
        matches!(self, Precedence::Holds { .. })
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Precedence::Holds { c } => Some(*c),
            Precedence::Fails { .. } => None,
        }
    }
}

/// Two-sided comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub holds: bool,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub forward: Precedence,
    pub backward: Precedence,
}

fn equivalence(forward: Precedence, backward: Precedence) -> Equivalence {
    Equivalence {
        holds: forward.holds() && backward.holds(),
        c1: forward.constant(),
        c2: backward.constant(),
        forward,
        backward,
    }
}

/// Core test on log-abscissae ordered toward the origin. The first `n_std`
/// points form the reference part whose median anchors the growth test.
fn precedes_core(ln_x: &[f64], ln_ratio: &[f64], n_std: usize) -> Precedence {
    let valid: Vec<usize> = (0..ln_x.len()).filter(|&i| !ln_ratio[i].is_nan()).collect();
    if valid.is_empty() {
        return Precedence::Holds { c: f64::NAN };
    }
    let std_part: Vec<f64> = valid
        .iter()
        .filter(|&&i| i < n_std)
        .map(|&i| ln_ratio[i])
        .filter(|v| v.is_finite())
        .collect();
    let l_med = median(&std_part).unwrap_or(0.0);
    let thresh = l_med + DIVERGENCE_FACTOR.ln();
    let deepest = *valid.last().unwrap();
    let tail_start = n_std / 2;
    let tail: Vec<usize> = valid.iter().cloned().filter(|&i| i >= tail_start).collect();
    let diverges = ln_ratio[deepest] > thresh || tail.iter().any(|&i| ln_ratio[i] == f64::INFINITY);
    if diverges {
        let i = valid
            .iter()
            .cloned()
            .find(|&i| ln_ratio[i] > thresh)
            .unwrap_or(deepest);
        return Precedence::Fails {
            at: ln_x[i].exp(),
            ln_at: ln_x[i],
        };
    }
    let m = tail
        .iter()
        .map(|&i| ln_ratio[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Precedence::Holds { c: m.exp() }
}

/// `rho1 ⪯ rho2`: `rho1 / rho2` bounded as `alpha -> 0`, tested on the grid
/// and its deep extension.
pub fn precedes(rho1: &dyn OrderLike, rho2: &dyn OrderLike, grid: &AlphaGrid) -> Precedence {
    let (pts, n_std) = deep_log_points(grid);
    let mut ln_x = Vec::with_capacity(pts.len());
    let mut lr = Vec::with_capacity(pts.len());
    for (i, &t) in pts.iter().enumerate() {
        let a = rho1.ln_at_t(t);
        let b = rho2.ln_at_t(t);
        if i >= n_std && (a.is_nan() || b.is_nan() || (a.is_infinite() && b.is_infinite())) {
            break;
        }
        ln_x.push(t);
        lr.push(a - b);
    }
    precedes_core(&ln_x, &lr, n_std)
}

/// `rho1 ≈ rho2`: precedence both ways, with the two constants.
pub fn equivalent_at_origin(
    rho1: &dyn OrderLike,
    rho2: &dyn OrderLike,
    grid: &AlphaGrid,
) -> Equivalence {
    equivalence(precedes(rho1, rho2, grid), precedes(rho2, rho1, grid))
}

/// Precedence from samples `(x_i, ln a_i, ln b_i)` with `x` ascending and
/// positive; the origin is at the small-`x` end.
pub fn precedes_samples(xs: &[f64], ln_a: &[f64], ln_b: &[f64]) -> Precedence {
    let n = xs.len().min(ln_a.len()).min(ln_b.len());
    let ln_x: Vec<f64> = (0..n).rev().map(|i| xs[i].ln()).collect();
    let lr: Vec<f64> = (0..n).rev().map(|i| ln_a[i] - ln_b[i]).collect();
    precedes_core(&ln_x, &lr, n)
}

/// `s1 ⪯ s2` near `lambda = 0`, sampled on the positive part of `grid`.
pub fn precedes_sources(s1: &dyn SourceLike, s2: &dyn SourceLike, grid: &LambdaGrid) -> Precedence {
    let xs = grid.positive();
    let a: Vec<f64> = xs.iter().map(|&l| s1.ln_s(l)).collect();
    let b: Vec<f64> = xs.iter().map(|&l| s2.ln_s(l)).collect();
    precedes_samples(&xs, &a, &b)
}

/// `s1 ≈ s2` near `lambda = 0`.
pub fn equivalent_sources(s1: &dyn SourceLike, s2: &dyn SourceLike, grid: &LambdaGrid) -> Equivalence {
    equivalence(precedes_sources(s1, s2, grid), precedes_sources(s2, s1, grid))
}
