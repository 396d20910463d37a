use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use specreg::numerics::{AlphaGrid, LambdaGrid};
use specreg::operators::{svd_decompose, Matrix, SpectralModel, SpectrumRule};
use specreg::{FilterFamily, OrderFn, SourceFn};

use crate::commands::CliError;

pub const MAX_DIM: usize = 512;
pub const DEFAULT_DIM: usize = 200;
pub const SVD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// λ values as a list or as `geom:min:max:per_decade`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    Text(String),
}

/// Run configuration; every field optional so that file and flags merge.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub filter: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub order: Option<String>,
    pub source: Option<String>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub alpha_per_decade: Option<usize>,
    pub lambda: Option<LambdaSpec>,
    pub mu: Option<Vec<f64>>,
    pub model: Option<String>,
    pub dim: Option<usize>,
    pub require: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

/// Flags shared by every subcommand. Flags override `--config` values,
/// which override the defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Filter family id (tikhonov, tsvd, ex3 .. ex10, landweber, showalter).
    #[arg(long)]
    pub filter: Option<String>,
    /// Family parameter, e.g. `k=0.5`, `mu=0.5`, `alpha0=0.3`. Repeatable.
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Rate function of `alpha`.
    #[arg(long, allow_hyphen_values = true)]
    pub order: Option<String>,
    /// Source function of `lambda`.
    #[arg(long, allow_hyphen_values = true)]
    pub source: Option<String>,
    /// Smallest α of the grid [default: 1e-7].
    #[arg(long)]
    pub alpha_min: Option<f64>,
    /// Largest α of the grid [default: alpha0 / 2].
    #[arg(long)]
    pub alpha_max: Option<f64>,
    /// α points per decade, at least 8 [default: 64, 512 for oscillatory
    /// families, 16 for `converge`].
    #[arg(long)]
    pub alpha_per_decade: Option<usize>,
    /// λ values `0.1,1,10` or `geom:min:max:per_decade`
    /// [default: geom:1e-2:10:2].
    #[arg(long)]
    pub lambda: Option<String>,
    /// Exponents tested by `classical` [default: 2^-6 .. 2^6].
    #[arg(long)]
    pub mu: Option<String>,
    /// Spectrum rule (`j^-2`, `j^-4`, `exp(-j)`) or path to a CSV matrix
    /// [default: j^-2].
    #[arg(long, allow_hyphen_values = true)]
    pub model: Option<String>,
    /// Dimension of synthetic models [default: 200].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Level to require: weak, strong or optimal.
    #[arg(long)]
    pub require: Option<String>,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// JSON file mirroring these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for randomized sampling (recorded; all current commands are
    /// deterministic).
    #[arg(long)]
    pub seed: Option<u64>,
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("bad {what} value `{}`", p.trim())))
        })
        .collect()
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("--param expects K=V, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Input(format!("--param {k}: bad number `{v}`")))?;
            cfg.params.insert(k.trim().to_string(), v);
        }
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { cfg.$f = self.$f.clone(); } )* };
        }
        over!(filter, order, source, alpha_min, alpha_max, alpha_per_decade, model, dim, require, out, format, seed);
        if let Some(l) = &self.lambda {
            cfg.lambda = Some(LambdaSpec::Text(l.clone()));
        }
        if let Some(m) = &self.mu {
            cfg.mu = Some(parse_list(m, "mu")?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("alpha-min", self.alpha_min), ("alpha-max", self.alpha_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Input(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        if let Some(p) = self.alpha_per_decade {
            if p < 8 {
                return Err(CliError::Input(format!("--alpha-per-decade must be at least 8, got {p}")));
            }
        }
        if let Some(d) = self.dim {
            if d == 0 || d > MAX_DIM {
                return Err(CliError::Input(format!("--dim must lie in 1..={MAX_DIM}, got {d}")));
            }
        }
        if let Some(mu) = &self.mu {
            if mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
                return Err(CliError::Input("mu grid must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(Format::Json)
    }

    pub fn filter(&self) -> Result<FilterFamily, CliError> {
        let id = self
            .filter
            .as_deref()
            .ok_or_else(|| CliError::Input("--filter is required".into()))?;
        Ok(FilterFamily::with_params(id, &self.params)?)
    }

    pub fn order(&self) -> Result<OrderFn, CliError> {
        let text = self
            .order
            .as_deref()
            .ok_or_else(|| CliError::Input("--order is required".into()))?;
        let o = OrderFn::parse(text)?;
        o.require_certified()?;
        Ok(o)
    }

    pub fn order_or(&self, default: &str) -> Result<OrderFn, CliError> {
        let o = OrderFn::parse(self.order.as_deref().unwrap_or(default))?;
        o.require_certified()?;
        Ok(o)
    }

    pub fn source(&self) -> Result<SourceFn, CliError> {
        let text = self
            .source
            .as_deref()
            .ok_or_else(|| CliError::Input("--source is required".into()))?;
        let s = SourceFn::parse(text)?;
        s.require_certified()?;
        Ok(s)
    }

    /// Overrides the fields of `base` that were given.
    pub fn alpha_grid(&self, base: AlphaGrid) -> Result<AlphaGrid, CliError> {
        Ok(AlphaGrid::new(
            self.alpha_min.unwrap_or(base.alpha_min),
            self.alpha_max.unwrap_or(base.alpha_max),
            self.alpha_per_decade.unwrap_or(base.per_decade),
        )?)
    }

    pub fn lambda_grid(&self, default: LambdaGrid) -> Result<LambdaGrid, CliError> {
        match &self.lambda {
            None => Ok(default),
            Some(LambdaSpec::List(v)) => Ok(LambdaGrid::from_values(v.clone())?),
            Some(LambdaSpec::Text(t)) => {
                if let Some(rest) = t.strip_prefix("geom:") {
                    let parts: Vec<&str> = rest.split(':').collect();
                    if parts.len() != 3 {
                        return Err(CliError::Input(format!("bad geometric lambda spec `{t}`")));
                    }
                    let min: f64 = parts[0].parse().map_err(input)?;
                    let max: f64 = parts[1].parse().map_err(input)?;
                    let pd: usize = parts[2].parse().map_err(input)?;
                    Ok(LambdaGrid::geometric(min, max, pd)?)
                } else {
                    Ok(LambdaGrid::from_values(parse_list(t, "lambda")?)?)
                }
            }
        }
    }

    pub fn model(&self) -> Result<SpectralModel, CliError> {
        let spec = self.model.as_deref().unwrap_or("j^-2");
        if let Ok(rule) = spec.parse::<SpectrumRule>() {
            return Ok(SpectralModel::synthetic(rule, self.dim.unwrap_or(DEFAULT_DIM))?);
        }
        let path = Path::new(spec);
        let m = Matrix::from_csv_path(path)?;
        Ok(svd_decompose(&m, SVD_TOL)?.model)
    }
}
