//! Spectral filter families `g_alpha(lambda)`, their residuals
//! `r_alpha(lambda) = 1 - lambda g_alpha(lambda)` and an axiom checker.
//!
//! Every catalog entry carries a residual in closed log form, evaluated at
//! `t = ln(alpha)`, so that limits as `alpha -> 0` can be probed far below
//! the range of `f64`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{geomspace, log_add_exp, log_sub_exp, AlphaGrid, LambdaGrid, LogNum};

/// `ln(1e-300)`: deepest log-α for families whose closed forms involve
/// `1/alpha` as a plain number.
pub const SHALLOW_LOG_ALPHA: f64 = -690.775_527_898_213_7;
/// Deepest log-α for families whose residual is analytic in `ln(alpha)`.
pub const DEEP_LOG_ALPHA: f64 = -1e300;

const LN3: f64 = 1.098_612_288_668_109_8;

type GFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Tikhonov,
    Tsvd,
    Ex3Exp,
    Ex4Log,
    Ex7Piecewise,
    Ex8Osc { k: f64 },
    Ex9Osc,
    Ex10Osc,
    Landweber { mu: f64 },
    Showalter,
    Custom(GFn),
}

/// A parametric filter family with its metadata.
#[derive(Clone)]
pub struct FilterFamily {
    pub id: String,
    pub alpha_max: f64,
    pub h2_constant: f64,
    pub oscillatory: bool,
    pub params: BTreeMap<String, f64>,
    kind: Kind,
}

impl fmt::Debug for FilterFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FilterFamily")
            .field("id", &self.id)
            .field("alpha_max", &self.alpha_max)
            .field("h2_constant", &self.h2_constant)
            .field("oscillatory", &self.oscillatory)
            .field("params", &self.params)
            .finish()
    }
}

/// Serializable description of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterInfo {
    pub id: String,
    pub alpha_max: f64,
    pub h2_constant: f64,
    pub oscillatory: bool,
    pub params: BTreeMap<String, f64>,
}

/// Residual with a log channel that survives underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualValue {
    pub value: f64,
    pub log_abs: f64,
    pub sign: i8,
}

impl ResidualValue {
    pub fn from_log(l: LogNum) -> Self {
        ResidualValue {
            value: l.value(),
            log_abs: l.ln_abs,
            sign: l.sign,
        }
    }
}

/// Catalog ids in canonical form.
pub const CATALOG: [&str; 10] = [
    "tikhonov",
    "tsvd",
    "ex3_exp",
    "ex4_log",
    "ex7_piecewise",
    "ex8_osc",
    "ex9_osc",
    "ex10_osc",
    "landweber",
    "showalter",
];

/// Maps short aliases (`ex3`, `ex8`, ...) to catalog ids.
pub fn canonical_id(id: &str) -> Option<&'static str> {
    let id = id.trim().to_ascii_lowercase();
    let c = match id.as_str() {
        "tikhonov" => "tikhonov",
        "tsvd" => "tsvd",
        "ex3" | "ex3_exp" => "ex3_exp",
        "ex4" | "ex4_log" => "ex4_log",
        "ex7" | "ex7_piecewise" => "ex7_piecewise",
        "ex8" | "ex8_osc" => "ex8_osc",
        "ex9" | "ex9_osc" => "ex9_osc",
        "ex10" | "ex10_osc" => "ex10_osc",
        "landweber" => "landweber",
        "showalter" => "showalter",
        _ => return None,
    };
    Some(c)
}

fn out_of_range(name: &str, value: f64, reason: &str) -> Error {
    Error::ParamOutOfRange {
        name: name.to_string(),
        value,
        reason: reason.to_string(),
    }
}

impl FilterFamily {
    /// Catalog entry with default parameters.
    pub fn catalog(id: &str) -> Result<Self> {
        Self::with_params(id, &BTreeMap::new())
    }

    /// Catalog entry with parameter overrides. Recognised keys: `alpha0`
    /// for every family, `k` for `ex8_osc`, `mu` for `landweber`.
    pub fn with_params(id: &str, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let cid = canonical_id(id).ok_or_else(|| Error::UnknownFilter(id.to_string()))?;
        for key in overrides.keys() {
            let ok = key == "alpha0"
                || (cid == "ex8_osc" && key == "k")
                || (cid == "landweber" && key == "mu");
            if !ok {
                return Err(out_of_range(key, overrides[key], "unknown parameter for this family"));
            }
        }
        let default_a0 = match cid {
            "ex4_log" => 0.3,
            "ex7_piecewise" => 0.4,
            _ => 1.0,
        };
        let a0 = overrides.get("alpha0").copied().unwrap_or(default_a0);
        if !(a0 > 0.0 && a0.is_finite()) {
            return Err(out_of_range("alpha0", a0, "must be positive"));
        }
        let mut params = BTreeMap::new();
        params.insert("alpha0".to_string(), a0);
        let (kind, h2, osc) = match cid {
            "tikhonov" => (Kind::Tikhonov, 1.0, false),
            "tsvd" => (Kind::Tsvd, 1.0, false),
            "ex3_exp" => (Kind::Ex3Exp, 1.0, false),
            "ex4_log" => {
                if a0 >= (-1f64).exp() {
                    return Err(out_of_range("alpha0", a0, "must be below 1/e"));
                }
                (Kind::Ex4Log, 1.0, false)
            }
            "ex7_piecewise" => {
                if a0 >= 0.5 {
                    return Err(out_of_range("alpha0", a0, "must be below 1/2"));
                }
                (Kind::Ex7Piecewise, 2.0 * LN3 / (2.0 * LN3 - 1.0 - 2.0 * a0), false)
            }
            "ex8_osc" => {
                let k = overrides.get("k").copied().unwrap_or(1.0);
                if !(k >= 1.0 / 3.0 && k.is_finite()) {
                    return Err(out_of_range("k", k, "must be at least 1/3 for a bounded lambda*g"));
                }
                if a0 > 1.0 {
                    return Err(out_of_range("alpha0", a0, "must not exceed 1"));
                }
                params.insert("k".to_string(), k);
                (Kind::Ex8Osc { k }, 1.0, true)
            }
            "ex9_osc" => {
                if a0 > 1.0 {
                    return Err(out_of_range("alpha0", a0, "must not exceed 1"));
                }
                (Kind::Ex9Osc, 1.0, true)
            }
            "ex10_osc" => {
                if a0 > 1.0 {
                    return Err(out_of_range("alpha0", a0, "must not exceed 1"));
                }
                (Kind::Ex10Osc, 1.0, true)
            }
            "landweber" => {
                let mu = overrides.get("mu").copied().unwrap_or(0.5);
                if !(mu > 0.0 && mu.is_finite()) {
                    return Err(out_of_range("mu", mu, "must be positive"));
                }
                if a0 > 1.0 {
                    return Err(out_of_range("alpha0", a0, "must not exceed 1"));
                }
                params.insert("mu".to_string(), mu);
                (Kind::Landweber { mu }, 1.0, false)
            }
            "showalter" => (Kind::Showalter, 1.0, false),
            _ => unreachable!(),
        };
        Ok(FilterFamily {
            id: cid.to_string(),
            alpha_max: a0,
            h2_constant: h2,
            oscillatory: osc,
            params,
            kind,
        })
    }

    /// A user-defined family given by `g(alpha, lambda)`. Its residual is
    /// computed as `1 - lambda g` and its log channel from that value.
    pub fn custom<F>(id: &str, alpha_max: f64, h2_constant: f64, g: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(alpha_max > 0.0) {
            return Err(out_of_range("alpha0", alpha_max, "must be positive"));
        }
        if !(h2_constant > 0.0) {
            return Err(out_of_range("h2_constant", h2_constant, "must be positive"));
        }
        Ok(FilterFamily {
            id: id.to_string(),
            alpha_max,
            h2_constant,
            oscillatory: false,
            params: BTreeMap::new(),
            kind: Kind::Custom(Arc::new(g)),
        })
    }

    pub fn info(&self) -> FilterInfo {
        FilterInfo {
            id: self.id.clone(),
            alpha_max: self.alpha_max,
            h2_constant: self.h2_constant,
            oscillatory: self.oscillatory,
            params: self.params.clone(),
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, Kind::Custom(_))
    }

    /// Upper bound (exclusive) on admissible eigenvalues, if any.
    pub fn lambda_limit(&self) -> Option<f64> {
        match self.kind {
            Kind::Landweber { mu } => Some(1.0 / mu),
            _ => None,
        }
    }

    /// Smallest `ln(alpha)` at which the log channel is trustworthy.
    pub fn min_log_alpha(&self) -> f64 {
        match self.kind {
            Kind::Tikhonov | Kind::Tsvd | Kind::Ex4Log | Kind::Ex7Piecewise => DEEP_LOG_ALPHA,
            _ => SHALLOW_LOG_ALPHA,
        }
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha > 0.0 && alpha <= self.alpha_max) {
            return Err(out_of_range(
                "alpha",
                alpha,
                &format!("must lie in (0, {}]", self.alpha_max),
            ));
        }
        if matches!(self.kind, Kind::Ex10Osc) && alpha >= 1.0 {
            return Err(out_of_range("alpha", alpha, "must be below 1"));
        }
        Ok(())
    }

    /// Checks that `lambda` is admissible for this family.
    pub fn check_lambda(&self, lambda: f64) -> Result<()> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(out_of_range("lambda", lambda, "must be finite and nonnegative"));
        }
        if let Some(limit) = self.lambda_limit() {
            if lambda >= limit {
                return Err(Error::LambdaRange { lambda, limit });
            }
        }
        Ok(())
    }

    /// `g_alpha(lambda)` with domain checks.
    pub fn eval_g(&self, alpha: f64, lambda: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        self.check_lambda(lambda)?;
        Ok(self.g_raw(alpha, lambda))
    }

    /// `r_alpha(lambda)` with domain checks.
    pub fn eval_residual(&self, alpha: f64, lambda: f64) -> Result<ResidualValue> {
        self.check_alpha(alpha)?;
        self.check_lambda(lambda)?;
        let log = self.residual_raw(alpha, lambda);
        let plain = self.residual_plain(alpha, lambda);
        let agrees = plain.is_finite()
            && plain.abs() >= f64::MIN_POSITIVE
            && (plain > 0.0) == (log.sign > 0)
            && log.sign != 0;
        Ok(ResidualValue {
            value: if agrees { plain } else { log.value() },
            log_abs: log.ln_abs,
            sign: log.sign,
        })
    }

    /// Residual from the plain closed form, exact where representable.
    pub fn residual_plain(&self, alpha: f64, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 1.0;
        }
        let osc = |c: f64| {
            let inv = 1.0 / alpha;
            (-lambda * inv).exp() + c * (lambda.powf(1.5) * inv).sin().abs() / lambda.sqrt()
        };
        match &self.kind {
            Kind::Tikhonov => alpha / (alpha + lambda),
            Kind::Tsvd => {
                if lambda >= alpha {
                    0.0
                } else {
                    1.0
                }
            }
            Kind::Ex3Exp => (1.0 + lambda) / (1.0 + lambda * (1.0 / alpha).exp()),
            Kind::Ex4Log => (1.0 + lambda) / (1.0 - lambda * alpha.ln()),
            Kind::Ex7Piecewise => {
                if lambda >= 2.0 * alpha {
                    let num = alpha * (1.0 + lambda);
                    num / (lambda * (alpha / (alpha + lambda)).ln() + num)
                } else {
                    1.0 - lambda * LN3 / (alpha * (2.0 * LN3 - 1.0 - 2.0 * alpha))
                }
            }
            Kind::Ex8Osc { k } => osc(alpha.powf(*k)),
            Kind::Ex9Osc => osc((-1.0 / alpha.sqrt()).exp()),
            Kind::Ex10Osc => osc(-1.0 / alpha.ln()),
            Kind::Landweber { mu } => ((-mu * lambda).ln_1p() / alpha).exp(),
            Kind::Showalter => (-lambda / alpha).exp(),
            Kind::Custom(g) => 1.0 - lambda * g(alpha, lambda),
        }
    }

    /// `g_alpha(lambda)` from the family's defining formula, no checks.
    pub fn g_raw(&self, alpha: f64, lambda: f64) -> f64 {
        match &self.kind {
            Kind::Tikhonov => 1.0 / (lambda + alpha),
            Kind::Tsvd => {
                if lambda < alpha {
                    0.0
                } else {
                    1.0 / lambda
                }
            }
            Kind::Ex3Exp => {
                let e = (-1.0 / alpha).exp();
                -(-1.0 / alpha).exp_m1() / (lambda + e)
            }
            Kind::Ex4Log => {
                let il = 1.0 / alpha.ln();
                (1.0 + il) / (lambda - il)
            }
            Kind::Ex7Piecewise => {
                let h = |l: f64| alpha / (alpha + (alpha / (alpha + l)).ln());
                if lambda >= 2.0 * alpha {
                    let hl = h(lambda);
                    (1.0 - hl) / (lambda + hl)
                } else {
                    let h2 = h(2.0 * alpha);
                    (1.0 - h2) / (2.0 * alpha + h2)
                }
            }
            Kind::Ex8Osc { k } => osc_g(alpha, lambda, alpha.powf(*k)),
            Kind::Ex9Osc => osc_g(alpha, lambda, (-1.0 / alpha.sqrt()).exp()),
            Kind::Ex10Osc => osc_g(alpha, lambda, -1.0 / alpha.ln()),
            Kind::Landweber { mu } => {
                if lambda == 0.0 {
                    mu / alpha
                } else {
                    -((-mu * lambda).ln_1p() / alpha).exp_m1() / lambda
                }
            }
            Kind::Showalter => {
                if lambda == 0.0 {
                    1.0 / alpha
                } else {
                    -(-lambda / alpha).exp_m1() / lambda
                }
            }
            Kind::Custom(g) => g(alpha, lambda),
        }
    }

    /// Residual at `alpha = e^t` as a signed log number, no checks.
    pub fn log_residual(&self, t: f64, lambda: f64) -> LogNum {
        self.log_residual_inv(t, (-t).exp(), lambda)
    }

    /// As [`Self::log_residual`] with `inv = 1/alpha` supplied by the caller.
    fn log_residual_inv(&self, t: f64, inv: f64, lambda: f64) -> LogNum {
        if lambda == 0.0 {
            return LogNum::ONE;
        }
        let ll = lambda.ln();
        match &self.kind {
            // ln r = t - ln(lambda + e^t)
            Kind::Tikhonov => LogNum::from_ln(t - log_add_exp(ll, t)),
            Kind::Tsvd => {
                if ll >= t {
                    LogNum::ZERO
                } else {
                    LogNum::ONE
                }
            }
            // r = (1 + lambda) e^{-1/alpha} / (e^{-1/alpha} + lambda)
            Kind::Ex3Exp => {
                LogNum::from_ln(lambda.ln_1p() - inv - log_add_exp(-inv, ll))
            }
            // r = (1 + lambda) / (1 - lambda t)
            Kind::Ex4Log => {
                LogNum::from_ln(lambda.ln_1p() - log_add_exp(0.0, ll + (-t).ln()))
            }
            Kind::Ex7Piecewise => ex7_log_residual(t, lambda, ll),
            Kind::Ex8Osc { k } => osc_log_residual(inv, lambda, ll, k * t),
            Kind::Ex9Osc => osc_log_residual(inv, lambda, ll, -(-t / 2.0).exp()),
            Kind::Ex10Osc => osc_log_residual(inv, lambda, ll, -(-t).ln()),
            Kind::Landweber { mu } => {
                let base = (-mu * lambda).ln_1p();
                if base == f64::NEG_INFINITY {
                    LogNum::ZERO
                } else {
                    LogNum::from_ln(base * inv)
                }
            }
            Kind::Showalter => LogNum::from_ln(-lambda * inv),
            Kind::Custom(g) => {
                let alpha = t.exp();
                LogNum::from_f64(1.0 - lambda * g(alpha, lambda))
            }
        }
    }

    /// Residual at `alpha` as a signed log number, no checks.
    pub fn residual_raw(&self, alpha: f64, lambda: f64) -> LogNum {
        if let Kind::Tsvd = self.kind {
            return if lambda >= alpha { LogNum::ZERO } else { LogNum::ONE };
        }
        let inv = 1.0 / alpha;
        if inv.is_finite() {
            self.log_residual_inv(alpha.ln(), inv, lambda)
        } else {
            self.log_residual(alpha.ln(), lambda)
        }
    }
}

// lambda^{-1}(1 - e^{-lambda/alpha}) - c lambda^{-3/2} |sin(lambda^{3/2}/alpha)|
fn osc_g(alpha: f64, lambda: f64, c: f64) -> f64 {
    if lambda == 0.0 {
        return (1.0 - c) / alpha;
    }
    let inv = 1.0 / alpha;
    let first = -(-lambda * inv).exp_m1() / lambda;
    let x = lambda.powf(1.5) * inv;
    if x < 1e-8 {
        // lambda^{-3/2} |sin x| ~ 1 / alpha
        first - c * inv
    } else {
        first - c * x.sin().abs() / (lambda * lambda.sqrt())
    }
}

// e^{-lambda/alpha} + e^{ln_c} lambda^{-1/2} |sin(lambda^{3/2}/alpha)|
fn osc_log_residual(inv: f64, lambda: f64, ll: f64, ln_c: f64) -> LogNum {
    let a = -lambda * inv;
    let s = (lambda.powf(1.5) * inv).sin().abs();
    let b = ln_c - 0.5 * ll + s.ln();
    LogNum::from_ln(log_add_exp(a, b))
}

fn ex7_log_residual(t: f64, lambda: f64, ll: f64) -> LogNum {
    // u = lambda / alpha in log form
    let lu = ll - t;
    if lu >= std::f64::consts::LN_2 {
        // r = alpha (1 + lambda) / (lambda L + alpha (1 + lambda)), L = -ln(1 + u) < 0
        let abs_l = log_add_exp(0.0, lu);
        let ln_num = t + lambda.ln_1p();
        let ln_neg = ll + abs_l.ln();
        let ln_den = log_sub_exp(ln_neg, ln_num);
        LogNum::signed(-1, ln_num - ln_den)
    } else {
        let alpha = t.exp();
        let u = lu.exp();
        LogNum::from_f64(1.0 - u * LN3 / (2.0 * LN3 - 1.0 - 2.0 * alpha))
    }
}

/// Witness for a failed axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomWitness {
    pub axiom: String,
    pub alpha: f64,
    pub lambda: f64,
    pub value: f64,
}

/// Outcome of the H1-H3 sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub h1_finite: bool,
    pub h2_bounded: bool,
    pub h2_observed_sup: f64,
    pub h3_pointwise: bool,
    pub h3_checked: bool,
    pub h3_worst_deviation: f64,
    pub h3_log_alpha: f64,
    pub witnesses: Vec<AxiomWitness>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.h1_finite && self.h2_bounded && self.h3_pointwise
    }
}

/// Tolerance for `|lambda g - 1|` at the deepest probed α.
pub const H3_TOL: f64 = 1e-3;

/// Grids used by [`verify_srm_axioms`] when none are given.
pub fn default_axiom_grids(filter: &FilterFamily) -> (AlphaGrid, LambdaGrid) {
    let a_hi = if matches!(filter.kind, Kind::Ex10Osc) {
        filter.alpha_max.min(1.0) * (1.0 - 1e-9)
    } else {
        filter.alpha_max
    };
    let per = if filter.oscillatory { 128 } else { 32 };
    let alpha = AlphaGrid {
        alpha_min: 1e-7,
        alpha_max: a_hi,
        per_decade: per,
    };
    let hi = filter.lambda_limit().map(|l| l * 0.999).unwrap_or(1e3);
    let mut lam = vec![0.0];
    lam.extend(geomspace(1e-8, hi, 16));
    (alpha, LambdaGrid { values: lam })
}

/// Sweeps H1 (finite g), H2 (`|lambda g| <= C`) and H3 (`lambda g -> 1`).
///
/// H3 is evaluated through the log channel at the deepest admissible α of
/// the family, or at the smallest grid α if that is deeper. Oscillatory
/// families are skipped for H3 (`h3_checked = false`).
pub fn verify_srm_axioms(
    filter: &FilterFamily,
    alpha_grid: &AlphaGrid,
    lambda_grid: &LambdaGrid,
) -> AxiomReport {
    let mut witnesses = Vec::new();
    let mut h1 = true;
    let mut h2 = true;
    let mut sup = 0.0f64;
    let alphas: Vec<f64> = alpha_grid
        .points()
        .into_iter()
        .filter(|a| *a <= filter.alpha_max)
        .collect();
    let lambdas: Vec<f64> = lambda_grid
        .values
        .iter()
        .cloned()
        .filter(|l| filter.check_lambda(*l).is_ok())
        .collect();
    for &a in &alphas {
        for &l in &lambdas {
            let g = filter.g_raw(a, l);
            if !g.is_finite() {
                if h1 {
                    witnesses.push(AxiomWitness {
                        axiom: "H1".into(),
                        alpha: a,
                        lambda: l,
                        value: g,
                    });
                }
                h1 = false;
                continue;
            }
            let lg = (l * g).abs();
            if lg > sup {
                sup = lg;
            }
            if lg > filter.h2_constant + 1e-9 && h2 {
                h2 = false;
                witnesses.push(AxiomWitness {
                    axiom: "H2".into(),
                    alpha: a,
                    lambda: l,
                    value: lg,
                });
            }
        }
    }
    if !h2 {
        // report the largest violation, not the first
        if let Some(w) = witnesses.iter_mut().find(|w| w.axiom == "H2") {
            for &a in &alphas {
                for &l in &lambdas {
                    let lg = (l * filter.g_raw(a, l)).abs();
                    if lg.is_finite() && lg > w.value {
                        w.alpha = a;
                        w.lambda = l;
                        w.value = lg;
                    }
                }
            }
        }
    }
    let t_deep = filter
        .min_log_alpha()
        .max(f64::MIN)
        .min(alpha_grid.alpha_min.ln());
    let mut worst = 0.0f64;
    let mut h3 = true;
    let checked = !filter.oscillatory;
    if checked {
        let mut wit = None;
        for &l in lambdas.iter().filter(|l| **l > 0.0) {
            let r = filter.log_residual(t_deep, l);
            let dev = if r.is_nan() { f64::INFINITY } else { r.value().abs() };
            if dev > worst || dev.is_nan() {
                worst = dev;
                wit = Some(l);
            }
        }
        if worst >= H3_TOL {
            h3 = false;
            witnesses.push(AxiomWitness {
                axiom: "H3".into(),
                alpha: t_deep.exp(),
                lambda: wit.unwrap_or(f64::NAN),
                value: worst,
            });
        }
    }
    AxiomReport {
        h1_finite: h1,
        h2_bounded: h2,
        h2_observed_sup: sup,
        h3_pointwise: h3,
        h3_checked: checked,
        h3_worst_deviation: worst,
        h3_log_alpha: t_deep,
        witnesses,
    }
}
