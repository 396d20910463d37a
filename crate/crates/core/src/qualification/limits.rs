//! Staged liminf/limsup estimation as `alpha -> 0`.
//!
//! Stage 0 is the geometric grid itself, with its lower half (in log scale)
//! as tail window. Each further stage doubles the depth `|ln alpha_min|`
//! and samples the lower half of `[ln alpha_min, ln alpha_max]` uniformly
//! in `ln alpha`. Deepening stops when two consecutive stages agree, when
//! both exceed the divergence cap or both fall below the positivity floor,
//! or when the family's resolvable depth is reached.

use serde::{Deserialize, Serialize};

use crate::numerics::{ln_cap, ln_floor, AlphaGrid};
use crate::qualification::ext;

/// Relative stage-to-stage movement accepted as convergence.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Relative movement allowed when the tail window start is halved.
pub const HALVING_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitKind {
    Liminf,
    Limsup,
}

/// How the estimate terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    /// Consecutive stages agree.
    Converged,
    /// Two consecutive stages above the divergence cap; value is `+inf`.
    Diverged,
    /// Two consecutive stages below the positivity floor.
    Vanishing,
    /// Still growing by more than a decade over the last stages when the
    /// deepest resolvable α was reached.
    Growing,
    /// Depth exhausted without any of the above.
    Unresolved,
}

/// Sampling metadata for one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub alpha_max: f64,
    pub alpha_min: f64,
    pub per_decade: usize,
    /// Deepest `ln(alpha)` sampled (may lie far below `f64` range for α).
    pub deepest_ln_alpha: f64,
    pub stages: usize,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub kind: LimitKind,
    #[serde(with = "ext")]
    pub value: f64,
    pub status: LimitStatus,
    #[serde(with = "ext")]
    pub tail_min: f64,
    #[serde(with = "ext")]
    pub tail_max: f64,
    pub stabilized: bool,
    /// `ln(alpha)` where the tail extreme was attained.
    pub ln_alpha_at: f64,
    pub grid_meta: GridMeta,
}

impl LimitEstimate {
    /// True when the statistic is judged unbounded.
    pub fn unbounded(&self) -> bool {
        matches!(self.status, LimitStatus::Diverged | LimitStatus::Growing)
    }

    /// True when the statistic is judged to vanish.
    pub fn vanishes(&self) -> bool {
        self.status == LimitStatus::Vanishing
    }

    /// Finite and above the floor.
    pub fn is_positive_finite(&self) -> bool {
        !self.unbounded() && !self.vanishes() && self.value.is_finite() && self.value >= crate::numerics::FLOOR
    }
}

/// Where and how densely to sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub grid: AlphaGrid,
    /// Deepest `ln(alpha)` that may be sampled.
    pub t_floor: f64,
    /// Point budget per stage beyond stage 0.
    pub max_points: usize,
}

impl EstimatorConfig {
    pub fn new(grid: AlphaGrid, t_floor: f64, oscillatory: bool) -> Self {
        EstimatorConfig {
            grid,
            t_floor,
            max_points: if oscillatory { 65_536 } else { 4_096 },
        }
    }
}

/// Absolute log error accepted for convergence decisions.
pub const PRECISE_ERR: f64 = 1e-4;
/// Absolute log error accepted for cap and floor decisions.
pub const COARSE_ERR: f64 = 1.0;

/// Rounding bound for a sum of logarithms with the given terms.
pub fn log_err(terms: &[f64]) -> f64 {
    if terms.iter().any(|x| x.is_infinite()) {
        return 0.0;
    }
    4.0 * f64::EPSILON * terms.iter().map(|x| x.abs()).sum::<f64>()
}

#[derive(Clone, Copy)]
struct Info {
    stat: f64,
    at: f64,
    tmin: f64,
    tmax: f64,
    half_stable: bool,
}

struct Stage {
    t_lo: f64,
    precise: Option<Info>,
    coarse: Option<Info>,
    points: usize,
}

struct Acc {
    kind: LimitKind,
    half: f64,
    stat: f64,
    hstat: f64,
    at: f64,
    tmin: f64,
    tmax: f64,
    any: bool,
}

impl Acc {
    fn new(kind: LimitKind, half: f64) -> Self {
        let init = match kind {
            LimitKind::Liminf => f64::INFINITY,
            LimitKind::Limsup => f64::NEG_INFINITY,
        };
        Acc {
            kind,
            half,
            stat: init,
            hstat: init,
            at: f64::NAN,
            tmin: f64::INFINITY,
            tmax: f64::NEG_INFINITY,
            any: false,
        }
    }

    fn better(&self, a: f64, b: f64) -> bool {
        match self.kind {
            LimitKind::Liminf => a < b,
            LimitKind::Limsup => a > b,
        }
    }

    fn push(&mut self, t: f64, v: f64) {
        if !self.any {
            self.at = t;
        }
        self.any = true;
        self.tmin = self.tmin.min(v);
        self.tmax = self.tmax.max(v);
        if self.better(v, self.stat) {
            self.stat = v;
            self.at = t;
        }
        if t <= self.half && self.better(v, self.hstat) {
            self.hstat = v;
        }
    }

    fn finish(self) -> Option<Info> {
        if !self.any {
            return None;
        }
        let half_stable = if self.stat == self.hstat {
            true
        } else if self.stat.is_finite() && self.hstat.is_finite() {
            (self.stat - self.hstat).abs() < HALVING_TOL.ln_1p()
        } else {
            false
        };
        Some(Info {
            stat: self.stat,
            at: self.at,
            tmin: self.tmin,
            tmax: self.tmax,
            half_stable,
        })
    }
}

fn eval_stage<F: Fn(f64) -> (f64, f64)>(f: &F, kind: LimitKind, pts: &[f64], t_lo: f64, mid: f64) -> Stage {
    let half = 0.5 * (mid + t_lo);
    let mut p = Acc::new(kind, half);
    let mut c = Acc::new(kind, half);
    let mut n = 0;
    for &t in pts {
        if t > mid {
            continue;
        }
        n += 1;
        let (v, e) = f(t);
        if v.is_nan() || e.is_nan() {
            continue;
        }
        if e <= COARSE_ERR {
            c.push(t, v);
        }
        if e <= PRECISE_ERR {
            p.push(t, v);
        }
    }
    Stage {
        t_lo,
        precise: p.finish(),
        coarse: c.finish(),
        points: n,
    }
}

fn moved(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Estimates the liminf or limsup of `exp(f(t))` as `t = ln(alpha) -> -inf`.
///
/// `f` returns the logarithm of the statistic and an absolute error bound
/// for it (see [`log_err`]); NaN samples are skipped. Samples within
/// [`PRECISE_ERR`] drive convergence, samples within [`COARSE_ERR`] drive the
/// cap and floor decisions.
pub fn estimate_limit<F: Fn(f64) -> (f64, f64)>(f: F, kind: LimitKind, cfg: &EstimatorConfig) -> LimitEstimate {
    let t_hi = cfg.grid.alpha_max.ln();
    let t_lo0 = cfg.grid.alpha_min.ln();
    let per_decade = cfg.grid.per_decade;
    let ln10 = std::f64::consts::LN_10;
    let tol = CONVERGENCE_TOL.ln_1p();

    let mut stages: Vec<Stage> = Vec::new();
    let pts0 = cfg.grid.ln_points();
    stages.push(eval_stage(&f, kind, &pts0, t_lo0, 0.5 * (t_hi + t_lo0)));
    let mut total = stages[0].points;

    let mut status = LimitStatus::Unresolved;
    let mut k = 1i32;
    loop {
        let prev_lo = stages.last().map(|s| s.t_lo).unwrap_or(t_lo0);
        let want = t_lo0.min(-1.0) * 2f64.powi(k);
        let t_lo = want.max(cfg.t_floor);
        if !(t_lo < prev_lo) || !want.is_finite() {
            break;
        }
        let mid = 0.5 * (t_hi + t_lo);
        let span_dec = (mid - t_lo) / ln10;
        let n = ((span_dec * per_decade as f64).ceil() + 1.0).clamp(2.0, cfg.max_points as f64) as usize;
        let pts: Vec<f64> = (0..n)
            .map(|i| mid + (t_lo - mid) * i as f64 / (n - 1) as f64)
            .collect();
        let st = eval_stage(&f, kind, &pts, t_lo, mid);
        total += st.points;
        if st.coarse.is_none() {
            break;
        }
        stages.push(st);
        let m = stages.len();
        if let (Some(a), Some(b)) = (stages[m - 2].coarse, stages[m - 1].coarse) {
            if a.stat > ln_cap() && b.stat > ln_cap() && b.stat >= a.stat {
                status = LimitStatus::Diverged;
                break;
            }
            if a.stat < ln_floor() && b.stat < ln_floor() {
                status = LimitStatus::Vanishing;
                break;
            }
        }
        if m >= 3 {
            if let (Some(a), Some(b), Some(c)) = (stages[m - 3].precise, stages[m - 2].precise, stages[m - 1].precise) {
                if moved(a.stat, b.stat) < tol && moved(b.stat, c.stat) < tol && c.half_stable {
                    status = LimitStatus::Converged;
                    break;
                }
            }
        }
        if t_lo <= cfg.t_floor {
            break;
        }
        k += 1;
    }

    let precise: Vec<(usize, Info)> = stages
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.precise.map(|p| (i, p)))
        .collect();
    let np = precise.len();
    if status == LimitStatus::Unresolved && np >= 3 {
        let (s0, s1, s2) = (precise[np - 3].1.stat, precise[np - 2].1.stat, precise[np - 1].1.stat);
        if s2 > s1 && s1 > s0 && s2 - s0 > ln10 {
            status = LimitStatus::Growing;
        }
    }
    let last_move = if np >= 2 {
        moved(precise[np - 1].1.stat, precise[np - 2].1.stat)
    } else {
        f64::INFINITY
    };
    if status == LimitStatus::Unresolved && np >= 2 && last_move < tol && precise[np - 1].1.half_stable {
        status = LimitStatus::Converged;
    }
    let m = stages.len();
    let (info, stage_idx) = match status {
        LimitStatus::Diverged | LimitStatus::Vanishing => (stages[m - 1].coarse, m - 1),
        _ => match precise.last() {
            Some(&(i, p)) => (Some(p), i),
            None => (stages[m - 1].coarse, m - 1),
        },
    };
    let stabilized = match status {
        LimitStatus::Converged | LimitStatus::Diverged | LimitStatus::Vanishing => true,
        LimitStatus::Growing => false,
        LimitStatus::Unresolved => {
            np >= 2 && precise[np - 1].1.half_stable && last_move < HALVING_TOL.ln_1p()
        }
    };
    let (stat, at, tmin, tmax) = match info {
        Some(i) => (i.stat, i.at, i.tmin, i.tmax),
        None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    let value = if status == LimitStatus::Diverged {
        f64::INFINITY
    } else {
        stat.exp()
    };
    LimitEstimate {
        kind,
        value,
        status,
        tail_min: tmin.exp(),
        tail_max: tmax.exp(),
        stabilized: stabilized && !value.is_nan(),
        ln_alpha_at: at,
        grid_meta: GridMeta {
            alpha_max: cfg.grid.alpha_max,
            alpha_min: cfg.grid.alpha_min,
            per_decade,
            deepest_ln_alpha: stages[stage_idx].t_lo,
            stages: m,
            points: total,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::new(AlphaGrid::standard(1.0, false), -1e300, false)
    }

    #[test]
    fn constant_converges() {
        let e = estimate_limit(|_| (2f64.ln(), 0.0), LimitKind::Liminf, &cfg());
        assert_eq!(e.status, LimitStatus::Converged);
        assert_relative_eq!(e.value, 2.0, max_relative = 1e-12);
        assert!(e.stabilized);
    }

    #[test]
    fn slow_log_convergence() {
        // 1 + 1/|t| -> 1
        let e = estimate_limit(|t| ((1.0 + 1.0 / t.abs()).ln(), 0.0), LimitKind::Liminf, &cfg());
        assert_eq!(e.status, LimitStatus::Converged);
        assert!((e.value - 1.0).abs() < 2e-3, "{}", e.value);
    }

    #[test]
    fn divergence_and_vanishing() {
        let d = estimate_limit(|t| (-t, 0.0), LimitKind::Limsup, &cfg());
        assert_eq!(d.status, LimitStatus::Diverged);
        assert_eq!(d.value, f64::INFINITY);
        let v = estimate_limit(|t| (t, 0.0), LimitKind::Limsup, &cfg());
        assert_eq!(v.status, LimitStatus::Vanishing);
        let inf = estimate_limit(|_| (f64::INFINITY, 0.0), LimitKind::Liminf, &cfg());
        assert_eq!(inf.status, LimitStatus::Diverged);
    }

    #[test]
    fn growth_cut_by_floor() {
        let c = EstimatorConfig::new(AlphaGrid::standard(1.0, false), -690.0, false);
        let e = estimate_limit(|t| (-t / 64.0 - (-t).ln(), 0.0), LimitKind::Limsup, &c);
        assert_eq!(e.status, LimitStatus::Growing);
        assert!(e.unbounded());
        assert!(e.value.is_finite());
    }

    #[test]
    fn tail_bounds_bracket_value() {
        let e = estimate_limit(|t| ((2.0 + (t * 7.0).sin()).ln(), 0.0), LimitKind::Liminf, &cfg());
        assert!(e.tail_min <= e.value && e.value <= e.tail_max);
    }

    #[test]
    fn imprecise_samples_do_not_decide() {
        // garbage beyond t = -30, exact 0.5 above
        let e = estimate_limit(
            |t| {
                if t < -30.0 {
                    (-1e3, 1e3)
                } else {
                    (0.5f64.ln(), 0.0)
                }
            },
            LimitKind::Liminf,
            &cfg(),
        );
        assert_eq!(e.status, LimitStatus::Converged);
        assert_relative_eq!(e.value, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn slow_growth_is_not_convergence() {
        // minimum near the window edge in two stages, then growth
        let e = estimate_limit(
            |t| {
                let u = -t;
                ((1.0 + 0.0316 * u).ln() - 0.5 * u.ln(), 0.0)
            },
            LimitKind::Liminf,
            &cfg(),
        );
        assert!(e.unbounded(), "{e:?}");
    }
}
