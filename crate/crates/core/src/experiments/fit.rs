use serde::{Deserialize, Serialize};

use super::study::ConvergenceStudy;
use crate::error::{Error, Result};

pub const MIN_FIT_POINTS: usize = 8;

/// Least squares of `ln err` against `ln rho(alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(alpha_lo, alpha_hi)`.
    pub window: (f64, f64),
    pub points: usize,
}

/// The study's α range with the lower end raised to `10 lambda_dim`.
pub fn default_window(study: &ConvergenceStudy) -> (f64, f64) {
    let (lo, hi) = study.alpha_range();
    (lo.max(10.0 * study.context.model.lambda_min()), hi)
}

pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// Fits over `window` (clipped to the study's range), or the default window.
pub fn fit_order(study: &ConvergenceStudy, window: Option<(f64, f64)>) -> Result<SlopeFit> {
    if study.records.is_empty() {
        return Err(Error::InsufficientData("empty study".into()));
    }
    let (slo, shi) = study.alpha_range();
    let (lo, hi) = match window {
        Some((a, b)) => (a.max(slo), b.min(shi)),
        None => default_window(study),
    };
    if !(lo <= hi) {
        return Err(Error::InsufficientData(format!("empty window [{lo}, {hi}]")));
    }
    let inside: Vec<_> = study
        .records
        .iter()
        .filter(|r| r.alpha >= lo && r.alpha <= hi)
        .collect();
    if let Some(z) = inside.iter().find(|r| r.err == 0.0) {
        return Err(Error::InsufficientData(format!("zero error at alpha={:e} in window", z.alpha)));
    }
    let pts: Vec<(f64, f64)> = inside
        .iter()
        .filter(|r| r.rho > 0.0 && r.rho.is_finite())
        .map(|r| (r.rho.ln(), r.err.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} points in window, need {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared,
        window: (lo, hi),
        points: pts.len(),
    })
}
