use std::fmt;

use serde::Serialize;

use specreg::experiments::{default_study_grid, fit_order, run_convergence, ConvergenceStudy, SlopeFit};
use specreg::filters::FilterInfo;
use specreg::numerics::{AlphaGrid, LambdaGrid};
use specreg::operators::{make_source_element, CoefVector};
use specreg::qualification::{
    check_companion, check_mp_qualification, classify_with, default_alpha_grid, default_construct_lambdas,
    default_mp_a, default_mu_grid, estimate_classical_order, estimate_srho, ext, construct_weak_qualification,
    Level, SrhoEntry,
};
use specreg::Error;

use crate::config::{Format, RunConfig};

/// Failure with its exit code: 1 negative verdict, 2 input, 3 numerical.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Verdict(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Verdict(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verdict(m) => write!(f, "verdict: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Hypothesis { .. } | Error::Precondition(_) => CliError::Verdict(msg),
            Error::NoConvergence(_) | Error::Bisection(_) | Error::InsufficientData(_) => CliError::Numerical(msg),
            _ => CliError::Input(msg),
        }
    }
}

/// Rendered output and exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub code: i32,
    /// Extra JSON for stdout when the main body goes to `--out`.
    pub side: Option<String>,
}

impl Output {
    fn new(body: String, code: i32) -> Self {
        Output { body, code, side: None }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn json_only(cfg: &RunConfig, cmd: &str) -> Result<(), CliError> {
    if cfg.format() == Format::Csv {
        return Err(CliError::Input(format!("`{cmd}` supports only --format json")));
    }
    Ok(())
}

fn required_level(cfg: &RunConfig) -> Result<Option<Level>, CliError> {
    cfg.require
        .as_deref()
        .map(|r| r.parse::<Level>().map_err(CliError::from))
        .transpose()
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Output, CliError> {
    json_only(cfg, "classify")?;
    let filter = cfg.filter()?;
    let rho = cfg.order()?;
    let grid = cfg.alpha_grid(default_alpha_grid(&filter))?;
    let lambdas = cfg.lambda_grid(LambdaGrid::standard())?;
    let required = required_level(cfg)?;
    let report = classify_with(&filter, &rho, &lambdas, &grid)?;
    let code = match required {
        Some(l) if report.level < l => 1,
        _ => 0,
    };
    Ok(Output::new(to_json(&report)?, code))
}

#[derive(Serialize)]
struct SrhoTable<'a> {
    filter: FilterInfo,
    order: String,
    alpha_grid: AlphaGrid,
    entries: &'a [SrhoEntry],
}

fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:e}")
    }
}

pub fn cmd_srho(cfg: &RunConfig) -> Result<Output, CliError> {
    let filter = cfg.filter()?;
    let rho = cfg.order()?;
    let grid = cfg.alpha_grid(default_alpha_grid(&filter))?;
    let lambdas = cfg.lambda_grid(LambdaGrid::standard())?;
    let mut entries = Vec::new();
    for &l in &lambdas.values {
        let estimate = estimate_srho(&filter, &rho, l, &grid)?;
        entries.push(SrhoEntry {
            lambda: l,
            stabilized: estimate.stabilized,
            estimate,
        });
    }
    let code = if entries.iter().all(|e| e.stabilized) { 0 } else { 3 };
    let body = match cfg.format() {
        Format::Json => to_json(&SrhoTable {
            filter: filter.info(),
            order: cfg.order.clone().unwrap_or_default(),
            alpha_grid: grid,
            entries: &entries,
        })?,
        Format::Csv => {
            let mut s = String::from("lambda,estimate,status,stabilized\n");
            for e in &entries {
                let status = serde_json::to_value(e.estimate.status)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_real(e.lambda),
                    fmt_real(e.estimate.value),
                    status,
                    e.stabilized
                ));
            }
            s
        }
    };
    Ok(Output::new(body, code))
}

pub fn cmd_classical(cfg: &RunConfig) -> Result<Output, CliError> {
    json_only(cfg, "classical")?;
    let filter = cfg.filter()?;
    let grid = cfg.alpha_grid(default_alpha_grid(&filter))?;
    let lambdas = cfg.lambda_grid(LambdaGrid::standard())?;
    let mu = cfg.mu.clone().unwrap_or_else(default_mu_grid);
    let interval = estimate_classical_order(&filter, &mu, &lambdas, &grid)?;
    Ok(Output::new(to_json(&interval)?, 0))
}

pub fn cmd_mp_check(cfg: &RunConfig) -> Result<Output, CliError> {
    json_only(cfg, "mp-check")?;
    let filter = cfg.filter()?;
    let rho = cfg.order()?;
    let grid = cfg.alpha_grid(default_alpha_grid(&filter))?;
    match required_level(cfg)? {
        Some(Level::Weak) => {
            let lambdas = cfg.lambda_grid(LambdaGrid::standard())?;
            let v = check_companion(&filter, &rho, None, &lambdas, &grid)?;
            let code = if v.holds { 0 } else { 1 };
            Ok(Output::new(to_json(&v)?, code))
        }
        Some(other) => Err(CliError::Input(format!(
            "mp-check accepts --require weak only, got `{}`",
            other.as_str()
        ))),
        None => {
            let v = check_mp_qualification(&filter, &rho, default_mp_a(&filter), &grid)?;
            let code = if v.passes { 0 } else { 1 };
            Ok(Output::new(to_json(&v)?, code))
        }
    }
}

pub fn cmd_construct(cfg: &RunConfig) -> Result<Output, CliError> {
    json_only(cfg, "construct")?;
    let filter = cfg.filter()?;
    let grid = cfg.alpha_grid(default_alpha_grid(&filter))?;
    let lambdas = cfg.lambda_grid(default_construct_lambdas(&filter))?;
    let r = construct_weak_qualification(&filter, &lambdas, &grid)?;
    let code = if r.certificate.holds { 0 } else { 1 };
    Ok(Output::new(to_json(&r)?, code))
}

#[derive(Serialize)]
struct ConvergeReport<'a> {
    study: &'a ConvergenceStudy,
    fit: &'a SlopeFit,
    #[serde(with = "ext")]
    max_ratio: f64,
}

pub fn cmd_converge(cfg: &RunConfig) -> Result<Output, CliError> {
    let filter = cfg.filter()?;
    let model = cfg.model()?;
    let rho = cfg.order_or("alpha")?;
    let s = cfg.source()?;
    let grid = cfg.alpha_grid(default_study_grid(&filter))?;
    let x = make_source_element(&model, &s, &CoefVector::default_generator(model.dim))?;
    let study = run_convergence(&model, &filter, &x, &rho, &grid)?;
    let fit = fit_order(&study, None)?;
    let max_ratio = study.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let report = ConvergeReport {
        study: &study,
        fit: &fit,
        max_ratio,
    };
    match cfg.format() {
        Format::Json => Ok(Output::new(to_json(&report)?, 0)),
        Format::Csv => {
            let csv = study.to_csv()?;
            Ok(Output {
                body: csv,
                code: 0,
                side: if cfg.out.is_some() { Some(to_json(&fit)?) } else { None },
            })
        }
    }
}
