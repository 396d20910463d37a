//! Signed log-domain arithmetic, sampling grids and small numeric helpers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values above this are treated as divergent.
pub const CAP: f64 = 1e12;
/// Values below this are treated as vanishing.
pub const FLOOR: f64 = 1e-12;

pub fn ln_cap() -> f64 {
    CAP.ln()
}

pub fn ln_floor() -> f64 {
    FLOOR.ln()
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when equal.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    let d = b - a;
    a + if d > -std::f64::consts::LN_2 {
        (-d.exp_m1()).ln()
    } else {
        (-d.exp()).ln_1p()
    }
}

/// Log-sum-exp of a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + s.ln()
}

fn is_good(x: f64) -> bool {
    x.is_finite() && x.abs() >= f64::MIN_POSITIVE
}

/// A real number stored as `sign * exp(ln_abs)`, plus the plain `f64`
/// value when it is representable.
///
/// Both channels are computed by their own arithmetic: the log channel
/// keeps relative information near 1 and far outside the `f64` range, the
/// plain channel keeps ordinary values exact. Zero is `sign == 0` with
/// `ln_abs == -inf`; NaN is flagged by a NaN `ln_abs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNum {
    pub sign: i8,
    pub ln_abs: f64,
    val: Option<f64>,
}

impl LogNum {
    pub const ZERO: LogNum = LogNum {
        sign: 0,
        ln_abs: f64::NEG_INFINITY,
        val: Some(0.0),
    };
    pub const ONE: LogNum = LogNum {
        sign: 1,
        ln_abs: 0.0,
        val: Some(1.0),
    };
    pub const NAN: LogNum = LogNum {
        sign: 0,
        ln_abs: f64::NAN,
        val: None,
    };

    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            Self::NAN
        } else if x == 0.0 {
            Self::ZERO
        } else {
            LogNum {
                sign: if x > 0.0 { 1 } else { -1 },
                ln_abs: x.abs().ln(),
                val: if is_good(x) { Some(x) } else { None },
            }
        }
    }

    /// Positive number with the given logarithm.
    pub fn from_ln(ln_abs: f64) -> Self {
        Self::signed(1, ln_abs)
    }

    pub fn signed(sign: i8, ln_abs: f64) -> Self {
        if ln_abs.is_nan() {
            Self::NAN
        } else if sign == 0 || ln_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            let sign = sign.signum();
            let v = sign as f64 * ln_abs.exp();
            LogNum {
                sign,
                ln_abs,
                val: if is_good(v) { Some(v) } else { None },
            }
        }
    }

    // Attaches a plain result when it agrees in sign with the log channel.
    fn with_plain(mut self, v: Option<f64>) -> Self {
        if let Some(v) = v {
            if self.sign == 0 && !self.is_nan() && v == 0.0 {
                self.val = Some(0.0);
            } else if is_good(v) && (v > 0.0) == (self.sign > 0) && self.sign != 0 {
                self.val = Some(v);
            }
        }
        self
    }

    fn plain2(a: Self, b: Self, f: impl Fn(f64, f64) -> f64) -> Option<f64> {
        match (a.val, b.val) {
            (Some(x), Some(y)) => Some(f(x, y)),
            _ => None,
        }
    }

    pub fn is_nan(&self) -> bool {
        self.ln_abs.is_nan()
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0 && !self.is_nan()
    }

    pub fn value(&self) -> f64 {
        if self.is_nan() {
            f64::NAN
        } else if let Some(v) = self.val {
            v
        } else if self.sign == 0 {
            0.0
        } else {
            self.sign as f64 * self.ln_abs.exp()
        }
    }

    pub fn neg(self) -> Self {
        LogNum {
            sign: -self.sign,
            ln_abs: self.ln_abs,
            val: self.val.map(|v| -v),
        }
    }

    pub fn abs(self) -> Self {
        LogNum {
            sign: self.sign.abs(),
            ln_abs: self.ln_abs,
            val: self.val.map(f64::abs),
        }
    }

    pub fn add(self, o: Self) -> Self {
        if self.is_nan() || o.is_nan() {
            return Self::NAN;
        }
        if self.sign == 0 {
            return o;
        }
        if o.sign == 0 {
            return self;
        }
        let plain = Self::plain2(self, o, |a, b| a + b);
        let r = if self.sign == o.sign {
            Self::signed(self.sign, log_add_exp(self.ln_abs, o.ln_abs))
        } else if self.ln_abs == f64::INFINITY && o.ln_abs == f64::INFINITY {
            return Self::NAN;
        } else {
            let (big, small) = if self.ln_abs >= o.ln_abs {
                (self, o)
            } else {
                (o, self)
            };
            Self::signed(big.sign, log_sub_exp(big.ln_abs, small.ln_abs))
        };
        r.with_plain(plain)
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    pub fn mul(self, o: Self) -> Self {
        if self.is_nan() || o.is_nan() {
            return Self::NAN;
        }
        if self.sign == 0 || o.sign == 0 {
            if self.ln_abs == f64::INFINITY || o.ln_abs == f64::INFINITY {
                return Self::NAN;
            }
            return Self::ZERO;
        }
        let plain = Self::plain2(self, o, |a, b| a * b);
        Self::signed(self.sign * o.sign, self.ln_abs + o.ln_abs).with_plain(plain)
    }

    pub fn div(self, o: Self) -> Self {
        if self.is_nan() || o.is_nan() {
            return Self::NAN;
        }
        if o.sign == 0 {
            if self.sign == 0 {
                return Self::NAN;
            }
            return Self::signed(self.sign, f64::INFINITY);
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        if self.ln_abs == f64::INFINITY && o.ln_abs == f64::INFINITY {
            return Self::NAN;
        }
        let plain = Self::plain2(self, o, |a, b| a / b);
        Self::signed(self.sign * o.sign, self.ln_abs - o.ln_abs).with_plain(plain)
    }

    /// `self ^ e`, with the exponent kept in log form so that products like
    /// `(1/alpha) * ln(1 - c sqrt(alpha))` stay finite.
    pub fn pow(self, e: Self) -> Self {
        if self.is_nan() || e.is_nan() {
            return Self::NAN;
        }
        if e.sign == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return if e.sign > 0 {
                Self::ZERO
            } else {
                Self::signed(1, f64::INFINITY)
            };
        }
        let sign = if self.sign > 0 {
            1
        } else {
            let ev = e.value();
            if ev.fract() != 0.0 || !ev.is_finite() {
                return Self::NAN;
            }
            if (ev / 2.0).fract() == 0.0 {
                1
            } else {
                -1
            }
        };
        let plain = Self::plain2(self, e, f64::powf);
        if self.ln_abs == 0.0 {
            return Self::signed(sign, 0.0).with_plain(plain);
        }
        let prod = LogNum::from_f64(self.ln_abs).mul(e);
        Self::signed(sign, prod.value()).with_plain(plain)
    }

    pub fn exp(self) -> Self {
        Self::from_ln(self.value())
    }

    pub fn ln(self) -> Self {
        if self.is_nan() || self.sign < 0 {
            return Self::NAN;
        }
        if self.sign == 0 {
            return Self::signed(-1, f64::INFINITY);
        }
        Self::from_f64(self.ln_abs)
    }

    pub fn sqrt(self) -> Self {
        if self.is_nan() || self.sign < 0 {
            return Self::NAN;
        }
        Self::signed(self.sign, self.ln_abs / 2.0).with_plain(self.val.map(f64::sqrt))
    }

    pub fn sin(self) -> Self {
        Self::from_f64(self.value().sin())
    }
}

/// Geometric grid in α, stored by its log-range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub per_decade: usize,
}

impl AlphaGrid {
    pub fn new(alpha_min: f64, alpha_max: f64, per_decade: usize) -> Result<Self> {
        if !(alpha_min > 0.0 && alpha_max > alpha_min && alpha_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "need 0 < alpha_min < alpha_max, got [{alpha_min}, {alpha_max}]"
            )));
        }
        if per_decade < 1 {
            return Err(Error::InvalidGrid("per_decade must be positive".into()));
        }
        Ok(AlphaGrid {
            alpha_min,
            alpha_max,
            per_decade,
        })
    }

    /// Default grid: from `alpha0 / 2` down to `1e-7`, 64 points per decade
    /// or 512 for oscillatory families.
    pub fn standard(alpha0: f64, oscillatory: bool) -> Self {
        AlphaGrid {
            alpha_min: 1e-7,
            alpha_max: alpha0 / 2.0,
            per_decade: if oscillatory { 512 } else { 64 },
        }
    }

    pub fn len(&self) -> usize {
        let decades = (self.alpha_max / self.alpha_min).log10();
        ((decades * self.per_decade as f64).ceil() as usize).max(1) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Log-α points in descending order (largest α first).
    pub fn ln_points(&self) -> Vec<f64> {
        let n = self.len();
        let hi = self.alpha_max.ln();
        let lo = self.alpha_min.ln();
        (0..n)
            .map(|i| hi + (lo - hi) * i as f64 / (n - 1) as f64)
            .collect()
    }

    /// α points in descending order.
    pub fn points(&self) -> Vec<f64> {
        self.ln_points().into_iter().map(f64::exp).collect()
    }
}

/// Set of sampled eigenvalues, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub values: Vec<f64>,
}

impl LambdaGrid {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidGrid("empty lambda grid".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidGrid("lambda values must be finite and >= 0".into()));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        Ok(LambdaGrid { values })
    }

    pub fn geometric(min: f64, max: f64, per_decade: usize) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) || per_decade == 0 {
            return Err(Error::InvalidGrid(format!(
                "bad geometric lambda spec [{min}, {max}] x {per_decade}"
            )));
        }
        Ok(LambdaGrid {
            values: geomspace(min, max, per_decade),
        })
    }

    /// `1e-2 ..= 10` with two points per decade.
    pub fn standard() -> Self {
        LambdaGrid {
            values: geomspace(1e-2, 10.0, 2),
        }
    }

    /// Drops points at or above `limit`.
    pub fn clipped_below(&self, limit: Option<f64>) -> Self {
        match limit {
            None => self.clone(),
            Some(l) => LambdaGrid {
                values: self.values.iter().cloned().filter(|v| *v < l).collect(),
            },
        }
    }

    pub fn positive(&self) -> Vec<f64> {
        self.values.iter().cloned().filter(|v| *v > 0.0).collect()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Ascending geometric points from `min` to `max` inclusive.
pub fn geomspace(min: f64, max: f64, per_decade: usize) -> Vec<f64> {
    if max <= min {
        return vec![min];
    }
    let decades = (max / min).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    let (lo, hi) = (min.ln(), max.ln());
    (0..=n)
        .map(|i| {
            if i == 0 {
                min
            } else if i == n {
                max
            } else {
                (lo + (hi - lo) * i as f64 / n as f64).exp()
            }
        })
        .collect()
}

/// Minimises `f` on `[a, b]` by golden-section search; returns `(x, f(x))`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc.total_cmp(&fd).is_le() {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    if fc.total_cmp(&fd).is_le() {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Median of finite values; `None` when there are none.
pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.iter().cloned().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Piecewise-linear interpolation of `ln y` against `ln x`, with linear
/// extrapolation from the end segments. `xs` ascending and positive.
pub fn loglog_interp(xs: &[f64], ln_ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 1 {
        return ln_ys[0];
    }
    let lx = x.ln();
    let i = match xs.iter().position(|v| *v >= x) {
        Some(0) => 0,
        Some(i) => i - 1,
        None => n - 2,
    };
    let (x0, x1) = (xs[i].ln(), xs[i + 1].ln());
    let (y0, y1) = (ln_ys[i], ln_ys[i + 1]);
    if x1 == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (lx - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lognum_roundtrip() {
        for x in [-3.5, -1e-200, 0.0, 2.0, 1e300] {
            let l = LogNum::from_f64(x);
            assert_relative_eq!(l.value(), x, max_relative = 1e-14);
        }
    }

    #[test]
    fn lognum_arith() {
        let a = LogNum::from_f64(3.0);
        let b = LogNum::from_f64(-5.0);
        assert_relative_eq!(a.add(b).value(), -2.0, max_relative = 1e-14);
        assert_relative_eq!(a.sub(b).value(), 8.0, max_relative = 1e-14);
        assert_relative_eq!(a.mul(b).value(), -15.0, max_relative = 1e-14);
        assert_relative_eq!(a.div(b).value(), -0.6, max_relative = 1e-14);
        assert_relative_eq!(a.pow(LogNum::from_f64(2.0)).value(), 9.0, max_relative = 1e-14);
        assert_relative_eq!(b.pow(LogNum::from_f64(3.0)).value(), -125.0, max_relative = 1e-14);
        assert!(b.pow(LogNum::from_f64(0.5)).is_nan());
        assert!(a.sub(a).is_zero());
        assert_relative_eq!(a.sqrt().value(), 3f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn lognum_deep_exponentials() {
        // alpha = e^-1e300: 1/alpha is far beyond f64 but its log is not
        let alpha = LogNum::from_ln(-1e300);
        let inv = LogNum::ONE.div(alpha);
        assert_eq!(inv.ln_abs, 1e300);
        let e = inv.neg().exp();
        assert_eq!(e.ln_abs, f64::NEG_INFINITY);
        let one_plus = LogNum::ONE.add(alpha);
        assert_eq!(one_plus.ln_abs, 0.0);
        let a = LogNum::from_ln(-1000.0);
        assert_eq!(a.ln().value(), -1000.0);
    }

    #[test]
    fn log_sub_exp_accuracy() {
        let v = log_sub_exp(0.0, -1e-20);
        assert_relative_eq!(v, (1e-20f64).ln(), max_relative = 1e-12);
        let w = log_sub_exp(1.0, 0.0);
        assert_relative_eq!(w, (std::f64::consts::E - 1.0).ln(), max_relative = 1e-14);
    }

    #[test]
    fn alpha_grid_shape() {
        let g = AlphaGrid::standard(1.0, false);
        let p = g.points();
        assert_relative_eq!(p[0], 0.5, max_relative = 1e-14);
        assert_relative_eq!(*p.last().unwrap(), 1e-7, max_relative = 1e-12);
        assert!(p.windows(2).all(|w| w[0] > w[1]));
        assert!(p.len() >= 6 * 64);
    }

    #[test]
    fn geomspace_endpoints() {
        let v = geomspace(1e-2, 10.0, 2);
        assert_eq!(v.len(), 7);
        assert_eq!(v[0], 1e-2);
        assert_eq!(v[6], 10.0);
    }

    #[test]
    fn golden_finds_parabola_min() {
        let (x, fx) = golden_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 80);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx < 1e-15);
    }

    #[test]
    fn interp_is_exact_for_powers() {
        let xs = [0.1, 1.0, 10.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| (x * x).ln()).collect();
        assert_relative_eq!(loglog_interp(&xs, &ys, 3.0).exp(), 9.0, max_relative = 1e-12);
        assert_relative_eq!(loglog_interp(&xs, &ys, 100.0).exp(), 1e4, max_relative = 1e-10);
    }
}
