use serde::{Deserialize, Serialize};

use super::eval::{derive_log_expr, eval_lognum, eval_plain};
use super::{parse_expr, FuncExpr, Var};
use crate::error::{Error, Result};
use crate::numerics::{geomspace, loglog_interp, AlphaGrid, LambdaGrid, LogNum};

/// Anything usable as a rate function `rho(alpha)`, evaluated at `t = ln(alpha)`.
pub trait OrderLike: Send + Sync {
    /// `ln(rho(e^t))`; `-inf` for zero, NaN when undefined.
    fn ln_at_t(&self, t: f64) -> f64;
    fn describe(&self) -> String;

    /// Deepest `ln(alpha)` at which the function is resolved.
    fn min_log_alpha(&self) -> f64 {
        -1e300
    }

    fn value(&self, alpha: f64) -> f64 {
        self.ln_at_t(alpha.ln()).exp()
    }

    /// Whether membership in the order class has been established.
    fn certified(&self) -> bool {
        true
    }
}

/// Anything usable as a source function `s(lambda)`.
pub trait SourceLike: Send + Sync {
    /// `ln(s(lambda))`; `-inf` for zero, NaN when undefined.
    fn ln_s(&self, lambda: f64) -> f64;
    fn describe(&self) -> String;

    fn value(&self, lambda: f64) -> f64 {
        self.ln_s(lambda).exp()
    }

    fn certified(&self) -> bool {
        true
    }
}

/// Rate function `rho(alpha)` with its certification status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFn {
    pub expr: FuncExpr,
    pub log_expr: Option<FuncExpr>,
    pub certified: bool,
    pub reason: Option<String>,
    /// Deepest `ln(alpha)` reached by the certification sweep.
    pub min_log_alpha: f64,
}

impl OrderFn {
    /// Parses and certifies against [`default_order_grid`].
    pub fn parse(text: &str) -> Result<Self> {
        certify_order_fn(parse_expr(text)?, &default_order_grid())
    }

    /// Parses and certifies against `grid`.
    pub fn parse_on(text: &str, grid: &AlphaGrid) -> Result<Self> {
        certify_order_fn(parse_expr(text)?, grid)
    }

    /// Wraps an expression without running the checks.
    pub fn unchecked(expr: FuncExpr) -> Self {
        let log_expr = derive_log_expr(&expr);
        OrderFn {
            expr,
            log_expr,
            certified: false,
            reason: Some("not checked".into()),
            min_log_alpha: -1e300,
        }
    }

    pub fn require_certified(&self) -> Result<()> {
        if self.certified {
            Ok(())
        } else {
            Err(Error::Uncertified(self.expr.to_string()))
        }
    }
}

impl OrderLike for OrderFn {
    fn ln_at_t(&self, t: f64) -> f64 {
        let x = LogNum::from_ln(t);
        match &self.log_expr {
            Some(le) => eval_lognum(le, x).value(),
            None => {
                let v = eval_lognum(&self.expr, x);
                if v.is_nan() || v.sign < 0 {
                    f64::NAN
                } else {
                    v.ln_abs
                }
            }
        }
    }

    fn describe(&self) -> String {
        self.expr.to_string()
    }

    fn min_log_alpha(&self) -> f64 {
        self.min_log_alpha
    }

    fn certified(&self) -> bool {
        self.certified
    }
}

/// Source function `s(lambda)` with its certification status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFn {
    pub expr: FuncExpr,
    pub certified: bool,
    pub reason: Option<String>,
}

impl SourceFn {
    /// Parses and certifies against [`default_source_grid`].
    pub fn parse(text: &str) -> Result<Self> {
        certify_source_fn(parse_expr(text)?, &default_source_grid())
    }

    pub fn require_certified(&self) -> Result<()> {
        if self.certified {
            Ok(())
        } else {
            Err(Error::Uncertified(self.expr.to_string()))
        }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        eval_plain(&self.expr, Some(lambda))
    }
}

impl SourceLike for SourceFn {
    fn ln_s(&self, lambda: f64) -> f64 {
        match eval_plain(&self.expr, Some(lambda)) {
            Ok(v) if v >= 0.0 => v.ln(),
            _ => f64::NAN,
        }
    }

    fn certified(&self) -> bool {
        self.certified
    }

    fn describe(&self) -> String {
        self.expr.to_string()
    }
}

/// Source function known on a table of eigenvalues, interpolated log-log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSource {
    pub label: String,
    pub lambdas: Vec<f64>,
    pub ln_values: Vec<f64>,
}

impl TabulatedSource {
    pub fn new(label: &str, lambdas: Vec<f64>, values: &[f64]) -> Result<Self> {
        if lambdas.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: lambdas.len(),
                got: values.len(),
            });
        }
        if lambdas.is_empty() {
            return Err(Error::InvalidGrid("empty source table".into()));
        }
        if lambdas.windows(2).any(|w| w[0] >= w[1]) || lambdas[0] <= 0.0 {
            return Err(Error::InvalidGrid("source table lambdas must be positive and ascending".into()));
        }
        Ok(TabulatedSource {
            label: label.to_string(),
            lambdas,
            ln_values: values.iter().map(|v| v.ln()).collect(),
        })
    }
}

impl SourceLike for TabulatedSource {
    fn ln_s(&self, lambda: f64) -> f64 {
        if let Some(i) = self.lambdas.iter().position(|l| *l == lambda) {
            return self.ln_values[i];
        }
        loglog_interp(&self.lambdas, &self.ln_values, lambda)
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Rate function known on a table of `(ln alpha, ln rho)`, linear in between
/// and linearly extrapolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedOrder {
    pub label: String,
    /// Ascending.
    pub ln_alphas: Vec<f64>,
    pub ln_values: Vec<f64>,
}

impl TabulatedOrder {
    pub fn new(label: &str, mut pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.is_empty() {
            return Err(Error::InvalidGrid("empty order table".into()));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts.dedup_by(|a, b| a.0 == b.0);
        Ok(TabulatedOrder {
            label: label.to_string(),
            ln_alphas: pts.iter().map(|p| p.0).collect(),
            ln_values: pts.iter().map(|p| p.1).collect(),
        })
    }
}

impl OrderLike for TabulatedOrder {
    fn ln_at_t(&self, t: f64) -> f64 {
        let xs = &self.ln_alphas;
        let ys = &self.ln_values;
        let n = xs.len();
        if n == 1 {
            return ys[0];
        }
        let i = match xs.iter().position(|v| *v >= t) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        if xs[i] == t {
            return ys[i];
        }
        ys[i] + (ys[i + 1] - ys[i]) * (t - xs[i]) / (xs[i + 1] - xs[i])
    }

    fn describe(&self) -> String {
        self.label.clone()
    }
}

/// Certification grid for rate functions when none is given.
pub fn default_order_grid() -> AlphaGrid {
    AlphaGrid {
        alpha_min: 1e-7,
        alpha_max: 0.5,
        per_decade: 64,
    }
}

/// Certification grid for source functions when none is given.
pub fn default_source_grid() -> LambdaGrid {
    LambdaGrid {
        values: geomspace(1e-12, 10.0, 8),
    }
}

/// Log-α points of `grid` (descending) followed by the deep points
/// `ln(alpha_min) * 2^k`. Returns the points and the standard-part length.
pub fn deep_log_points(grid: &AlphaGrid) -> (Vec<f64>, usize) {
    let mut pts = grid.ln_points();
    let n = pts.len();
    let base = grid.alpha_min.ln().min(-1.0);
    let mut t = base * 2.0;
    while t >= -1e300 {
        pts.push(t);
        t *= 2.0;
    }
    (pts, n)
}

/// Checks positivity, nondecrease and decay to zero of `rho` on `grid`
/// extended by the deep points; records the outcome in the returned value.
///
/// The deep extension stops at the first point where the value is no
/// longer finite or stops decreasing, which is where `f64` loses the
/// resolution to represent it; that depth is kept as `min_log_alpha`.
pub fn certify_order_fn(expr: FuncExpr, grid: &AlphaGrid) -> Result<OrderFn> {
    if expr.variable() == Some(Var::Lambda) {
        return Err(Error::Precondition(format!(
            "order function `{expr}` must be a function of alpha"
        )));
    }
    for a in grid.points() {
        eval_plain(&expr, Some(a))?;
    }
    let mut f = OrderFn::unchecked(expr);
    let (pts, n_std) = deep_log_points(grid);
    let mut lv: Vec<f64> = Vec::with_capacity(pts.len());
    for (i, &t) in pts.iter().enumerate() {
        let v = f.ln_at_t(t);
        if i >= n_std {
            let prev = lv[i - 1];
            if !v.is_finite() || v > prev + 1e-12 * prev.abs().max(1.0) {
                break;
            }
        }
        lv.push(v);
    }
    f.min_log_alpha = pts[lv.len() - 1];
    let fail = |why: String| (false, Some(why));
    let (ok, reason) = if let Some(i) = lv[..n_std].iter().position(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
        fail(format!("rho is not positive at alpha={:e}", pts[i].exp()))
    } else if let Some(i) = (1..lv.len()).find(|&i| lv[i] > lv[i - 1] + 1e-12 * lv[i - 1].abs().max(1.0)) {
        fail(format!("rho decreases in alpha near alpha={:e} (ln alpha={})", pts[i].exp(), pts[i]))
    } else {
        let first = lv[0];
        let deep = *lv.last().unwrap_or(&first);
        if deep - first < (1e-3f64).ln() || deep < (1e-6f64).ln() {
            (true, None)
        } else {
            fail(format!(
                "rho does not decay: ln rho goes from {first} to {deep} over the grid"
            ))
        }
    };
    f.certified = ok;
    f.reason = reason;
    Ok(f)
}

/// Checks positivity, vanishing at the origin and absence of jumps.
pub fn certify_source_fn(expr: FuncExpr, grid: &LambdaGrid) -> Result<SourceFn> {
    if expr.variable() == Some(Var::Alpha) {
        return Err(Error::Precondition(format!(
            "source function `{expr}` must be a function of lambda"
        )));
    }
    let lams = grid.positive();
    if lams.is_empty() {
        return Err(Error::InvalidGrid("no positive lambda in grid".into()));
    }
    let mut vals = Vec::with_capacity(lams.len());
    for &l in &lams {
        vals.push(eval_plain(&expr, Some(l))?);
    }
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let reason = if let Some(i) = vals.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        Some(format!("s({}) = {} is not positive and finite", lams[i], vals[i]))
    } else if !(vals[0] < 1e-3 * max) {
        Some(format!(
            "s does not vanish at the origin: s({}) = {} vs max {}",
            lams[0], vals[0], max
        ))
    } else { (1..vals.len()).find(|&i| {
        let r = vals[i] / vals[i - 1];
        !(0.1..=10.0).contains(&r)
    }).map(|i| format!(
            "jump between lambda={} and lambda={}",
            lams[i - 1],
            lams[i]
        )) };
    Ok(SourceFn {
        expr,
        certified: reason.is_none(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_certification() {
        assert!(OrderFn::parse("alpha^2").unwrap().certified);
        let g = AlphaGrid::new(1e-7, 0.3, 64).unwrap();
        assert!(OrderFn::parse_on("-1/ln(alpha)", &g).unwrap().certified);
        let bad = OrderFn::parse("1+alpha").unwrap();
        assert!(!bad.certified);
        assert!(bad.reason.is_some());
        assert!(!OrderFn::parse("1/alpha").unwrap().certified);
        assert!(OrderFn::parse("exp(-1/alpha)").unwrap().certified);
        assert!(OrderFn::parse("(1-0.5*sqrt(alpha))^(1/alpha)").unwrap().certified);
        assert!(OrderFn::parse("lambda").is_err());
    }

    #[test]
    fn source_certification() {
        assert!(SourceFn::parse("lambda^0.5").unwrap().certified);
        assert!(SourceFn::parse("lambda/(1+lambda)").unwrap().certified);
        assert!(!SourceFn::parse("1").unwrap().certified);
        assert!(!SourceFn::parse("lambda^(-1)").unwrap().certified);
        assert!(SourceFn::parse("alpha").is_err());
    }

    #[test]
    fn log_expr_derived_for_exp_root() {
        let f = OrderFn::parse("exp(-1/alpha)").unwrap();
        assert!(f.log_expr.is_some());
        assert_relative_eq!(super::super::eval_log(&f, 1e-3).unwrap(), -1000.0, max_relative = 1e-12);
        let g = OrderFn::parse("exp(-1/sqrt(alpha))").unwrap();
        assert_relative_eq!(super::super::eval_log(&g, 1e-6).unwrap(), -1000.0, max_relative = 1e-12);
        let h = OrderFn::parse("alpha").unwrap();
        assert!(h.log_expr.is_none());
        assert_relative_eq!(super::super::eval_log(&h, 1e-3).unwrap(), -6.907755278982137, max_relative = 1e-12);
    }

    #[test]
    fn deep_channel() {
        let f = OrderFn::parse("-1/ln(alpha)").unwrap();
        assert_relative_eq!(f.ln_at_t(-1e300), -(1e300f64.ln()), max_relative = 1e-14);
        let g = OrderFn::parse("alpha").unwrap();
        assert_eq!(g.ln_at_t(-1e300), -1e300);
    }

    #[test]
    fn tables_interpolate() {
        let s = TabulatedSource::new("x", vec![0.1, 1.0, 10.0], &[0.1, 1.0, 10.0]).unwrap();
        assert_relative_eq!(s.value(3.0), 3.0, max_relative = 1e-12);
        let o = TabulatedOrder::new("y", vec![(-2.0, -4.0), (0.0, 0.0)]).unwrap();
        assert_relative_eq!(o.ln_at_t(-1.0), -2.0);
        assert_relative_eq!(o.ln_at_t(-3.0), -6.0);
    }
}
