use serde::{Deserialize, Serialize};

use super::fit::ols;
use super::study::{default_study_grid, run_convergence, ConvergenceStudy};
use crate::error::Result;
use crate::filters::FilterFamily;
use crate::funcdsl::{OrderFn, OrderLike, SourceFn};
use crate::numerics::LambdaGrid;
use crate::operators::{make_source_element, membership_probe, CoefVector, Membership, SpectralModel, SpectrumRule};
use crate::qualification::{check_order_source_pair, default_alpha_grid, ext, PairVerdict};

/// Largest tail ratio still read as bounded.
pub const TAIL_CAP: f64 = 1e6;
/// Smallest slope of `ln(err/rho)` against `ln rho` over the lower half of
/// the tail still read as bounded.
pub const TAIL_SLOPE_MIN: f64 = -0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatio {
    pub bounded: bool,
    #[serde(with = "ext")]
    pub max_ratio: f64,
    #[serde(with = "ext::opt")]
    pub slope: Option<f64>,
    /// Records with `rho(alpha) >= 10 lambda_dim`.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseReport {
    pub pair_certificate: PairVerdict,
    pub tail: TailRatio,
    /// Certificate holds and the tail ratio is bounded.
    pub prediction: bool,
    /// The certificate failed, so no claim is made.
    pub declined: bool,
    pub verification: Membership,
    /// `None` when declined.
    pub agree: Option<bool>,
}

fn tail_ratio(study: &ConvergenceStudy) -> TailRatio {
    let floor = 10.0 * study.context.model.lambda_min();
    let pts: Vec<(f64, f64)> = study
        .records
        .iter()
        .filter(|r| r.rho >= floor && r.rho.is_finite() && r.ratio > 0.0 && r.ratio.is_finite())
        .map(|r| (r.rho.ln(), r.ratio.ln()))
        .collect();
    let max_ratio = study
        .records
        .iter()
        .filter(|r| r.rho >= floor)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let lower = &pts[pts.len() / 2..];
    let slope = if lower.len() >= 4 {
        let xs: Vec<f64> = lower.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = lower.iter().map(|p| p.1).collect();
        Some(ols(&xs, &ys).0)
    } else {
        None
    };
    TailRatio {
        bounded: max_ratio <= TAIL_CAP && slope.is_none_or(|s| s >= TAIL_SLOPE_MIN),
        max_ratio,
        slope,
        points: pts.len(),
    }
}

/// Predicts `x_dagger` in the range of `s(T*T)` from an order-source
/// certificate and the observed rate, then checks membership directly.
pub fn converse_probe(
    study: &ConvergenceStudy,
    filter: &FilterFamily,
    rho: &dyn OrderLike,
    s: &SourceFn,
    h: Option<&dyn OrderLike>,
) -> Result<ConverseReport> {
    let pair_certificate =
        check_order_source_pair(filter, rho, s, h, &LambdaGrid::standard(), &default_alpha_grid(filter))?;
    let tail = tail_ratio(study);
    let verification = membership_probe(&study.context.model, &study.context.x_dagger, s)?;
    let declined = !pair_certificate.holds;
    let prediction = pair_certificate.holds && tail.bounded;
    let agree = if declined {
        None
    } else {
        Some(prediction == verification.is_inside())
    };
    Ok(ConverseReport {
        pair_certificate,
        tail,
        prediction,
        declined,
        verification,
        agree,
    })
}

/// A scripted converse experiment on `lambda_j = j^-2`, dim 200.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub filter: String,
    pub order: String,
    /// Source tested by the probe.
    pub source: String,
    /// `x_dagger = element_source(lambda_j) * generator_j`.
    pub element_source: String,
    pub generator: String,
    pub expect_inside: bool,
}

impl Scenario {
    fn new(name: &str, filter: &str, order: &str, source: &str, element: &str, gen: &str, inside: bool) -> Self {
        Scenario {
            name: name.into(),
            filter: filter.into(),
            order: order.into(),
            source: source.into(),
            element_source: element.into(),
            generator: gen.into(),
            expect_inside: inside,
        }
    }

    fn generator_vec(&self, dim: usize) -> CoefVector {
        match self.generator.as_str() {
            "j" => CoefVector::power(dim, 1.0),
            _ => CoefVector::default_generator(dim),
        }
    }

    pub fn run(&self) -> Result<ConverseReport> {
        let dim = 200;
        let model = SpectralModel::synthetic(SpectrumRule::InvSquare, dim)?;
        let filter = FilterFamily::catalog(&self.filter)?;
        let rho = OrderFn::parse(&self.order)?;
        let s = SourceFn::parse(&self.source)?;
        let es = SourceFn::parse(&self.element_source)?;
        let x = make_source_element(&model, &es, &self.generator_vec(dim))?;
        let study = run_convergence(&model, &filter, &x, &rho, &default_study_grid(&filter))?;
        converse_probe(&study, &filter, &rho, &s, None)
    }
}

/// Three scenarios with `x_dagger` in the source set and three outside.
pub fn converse_scenarios() -> Vec<Scenario> {
    let lam = "lambda";
    let frac = "lambda/(1+lambda)";
    let ex3 = "exp(-1/alpha)";
    let w = "j^-0.6";
    vec![
        Scenario::new("tikhonov-inside", "tikhonov", "alpha", lam, lam, w, true),
        Scenario::new("ex3-inside", "ex3_exp", ex3, frac, frac, w, true),
        Scenario::new("ex4-inside", "ex4_log", "-1/ln(alpha)", frac, frac, w, true),
        Scenario::new("tikhonov-growing-generator", "tikhonov", "alpha", lam, lam, "j", false),
        Scenario::new("ex3-growing-generator", "ex3_exp", ex3, frac, frac, "j", false),
        Scenario::new("tikhonov-rougher-element", "tikhonov", "alpha", lam, "lambda^0.5", w, false),
    ]
}
