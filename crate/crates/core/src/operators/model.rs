use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FilterFamily;
use crate::funcdsl::{SourceFn, SourceLike};
use crate::numerics::log_sum_exp;

use super::svd::MAX_DIM;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub label: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            label: "dense".into(),
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            label: "dense".into(),
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        t.label = self.label.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                got: o.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..o.cols {
                    out.data[i * o.cols + j] += a * o.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::LengthMismatch {
                expected: self.cols,
                got: x.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
            .collect())
    }

    /// Reads comma-separated rows; a first row that does not parse as
    /// numbers is taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(f64::from_str).collect();
            match parsed {
                Ok(r) => rows.push(r),
                Err(_) if i == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("row {}: {e}", i + 1))),
            }
        }
        if rows.is_empty() {
            return Err(Error::Parse("no numeric rows".into()));
        }
        Matrix::from_rows(&rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dense".into());
        Ok(Matrix::from_csv_reader(f)?.with_label(&label))
    }
}

/// Eigenvalue decay rule for synthetic models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrumRule {
    /// `j^-2`
    #[serde(rename = "j^-2")]
    InvSquare,
    /// `j^-4`
    #[serde(rename = "j^-4")]
    InvFourth,
    /// `e^-j`
    #[serde(rename = "exp(-j)")]
    Exponential,
}

impl SpectrumRule {
    pub fn eigenvalue(self, j: usize) -> f64 {
        let x = j as f64;
        match self {
            SpectrumRule::InvSquare => x.powi(-2),
            SpectrumRule::InvFourth => x.powi(-4),
            SpectrumRule::Exponential => (-x).exp(),
        }
    }
}

impl fmt::Display for SpectrumRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumRule::InvSquare => "j^-2",
            SpectrumRule::InvFourth => "j^-4",
            SpectrumRule::Exponential => "exp(-j)",
        })
    }
}

impl FromStr for SpectrumRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace(' ', "").as_str() {
            "j^-2" | "j^(-2)" | "inv2" | "poly2" => Ok(SpectrumRule::InvSquare),
            "j^-4" | "j^(-4)" | "inv4" | "poly4" => Ok(SpectrumRule::InvFourth),
            "exp(-j)" | "e^-j" | "e^(-j)" | "exp" => Ok(SpectrumRule::Exponential),
            other => Err(Error::Parse(format!("unknown spectrum rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    SyntheticDiagonal { rule: String },
    DenseSvd { matrix_id: String },
    Explicit,
}

/// Eigenvalues of `T*T`, strictly positive and descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub eigenvalues: Vec<f64>,
    pub dim: usize,
    pub provenance: Provenance,
    /// Reference `||T||^2`.
    pub norm_sq: f64,
}

impl SpectralModel {
    pub fn new(mut eigenvalues: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidGrid("empty spectrum".into()));
        }
        if eigenvalues.len() > MAX_DIM {
            return Err(Error::DimensionCap {
                rows: eigenvalues.len(),
                cols: 1,
                cap: MAX_DIM,
            });
        }
        if eigenvalues.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidGrid("eigenvalues must be positive and finite".into()));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let norm_sq = eigenvalues[0];
        Ok(SpectralModel {
            dim: eigenvalues.len(),
            eigenvalues,
            provenance,
            norm_sq,
        })
    }

    /// `lambda_j = rule(j)` for `j = 1..=dim`.
    pub fn synthetic(rule: SpectrumRule, dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::DimensionCap {
                rows: dim,
                cols: 1,
                cap: MAX_DIM,
            });
        }
        let eig: Vec<f64> = (1..=dim).map(|j| rule.eigenvalue(j)).collect();
        if eig.iter().any(|l| *l <= 0.0) {
            return Err(Error::InvalidGrid(format!("{rule} underflows at dim {dim}")));
        }
        SpectralModel::new(
            eig,
            Provenance::SyntheticDiagonal {
                rule: rule.to_string(),
            },
        )
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[self.dim - 1]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    fn check_len(&self, x: &CoefVector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Coefficients in the eigenbasis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefVector(pub Vec<f64>);

impl CoefVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `j^p` for `j = 1..=dim`.
    pub fn power(dim: usize, p: f64) -> Self {
        CoefVector((1..=dim).map(|j| (j as f64).powf(p)).collect())
    }

    /// The default generator `w_j = j^-0.6`.
    pub fn default_generator(dim: usize) -> Self {
        CoefVector::power(dim, -0.6)
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        CoefVector(v)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl AsRef<CoefVector> for CoefVector {
    fn as_ref(&self) -> &CoefVector {
        self
    }
}

/// `x_j = s(lambda_j) w_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceElement {
    pub x_dagger: CoefVector,
    pub generator_w: CoefVector,
    pub source_s: SourceFn,
}

impl AsRef<CoefVector> for SourceElement {
    fn as_ref(&self) -> &CoefVector {
        &self.x_dagger
    }
}

pub fn make_source_element(model: &SpectralModel, s: &SourceFn, w: &CoefVector) -> Result<SourceElement> {
    s.require_certified()?;
    model.check_len(w)?;
    let x = model
        .eigenvalues
        .iter()
        .zip(&w.0)
        .map(|(&l, &wj)| if wj == 0.0 { 0.0 } else { s.value(l) * wj })
        .collect();
    Ok(SourceElement {
        x_dagger: CoefVector(x),
        generator_w: w.clone(),
        source_s: s.clone(),
    })
}

fn residuals(model: &SpectralModel, filter: &FilterFamily, alpha: f64) -> Result<Vec<crate::ResidualValue>> {
    model
        .eigenvalues
        .iter()
        .map(|&l| filter.eval_residual(alpha, l))
        .collect()
}

/// `(R_alpha T x)_j = g_alpha(lambda_j) lambda_j x_j = x_j - r_alpha(lambda_j) x_j`.
pub fn regularize(model: &SpectralModel, filter: &FilterFamily, alpha: f64, x: &CoefVector) -> Result<CoefVector> {
    model.check_len(x)?;
    let r = residuals(model, filter, alpha)?;
    Ok(CoefVector(
        x.0.iter().zip(&r).map(|(&xj, rj)| xj - rj.value * xj).collect(),
    ))
}

/// `sqrt(sum_j r_alpha(lambda_j)^2 x_j^2)`, summed in the log domain.
pub fn regularization_error<X: AsRef<CoefVector>>(
    model: &SpectralModel,
    filter: &FilterFamily,
    alpha: f64,
    xdag: &X,
) -> Result<f64> {
    Ok(log_regularization_error(model, filter, alpha, xdag)?.exp())
}

/// Natural log of [`regularization_error`]; `-inf` when the error is zero.
pub fn log_regularization_error<X: AsRef<CoefVector>>(
    model: &SpectralModel,
    filter: &FilterFamily,
    alpha: f64,
    xdag: &X,
) -> Result<f64> {
    let x = xdag.as_ref();
    model.check_len(x)?;
    let r = residuals(model, filter, alpha)?;
    let terms: Vec<f64> = x
        .0
        .iter()
        .zip(&r)
        .filter(|(xj, rj)| **xj != 0.0 && rj.sign != 0)
        .map(|(xj, rj)| 2.0 * (rj.log_abs + xj.abs().ln()))
        .collect();
    if terms.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(0.5 * log_sum_exp(&terms))
}

pub const MEMBERSHIP_TAIL_SHARE: f64 = 0.1;
pub const MEMBERSHIP_TERM_FACTOR: f64 = 10.0;
pub const MEMBERSHIP_S_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Membership {
    /// `bound` is `||v||` with `v_j = x_j / s(lambda_j)`.
    Inside { bound: f64 },
    /// `index` is the 1-based position `j`.
    Outside { index: usize, reason: String },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

/// Tail-decay test for `x` in the range of `s(T*T)`.
///
/// With `v_j = x_j / s(lambda_j)`, inside when the last quarter of the
/// indices carries under 10% of `sum v_j^2` and no `|v_j|` exceeds ten
/// times the smallest nonzero `|v_i|`, `i < j`.
pub fn membership_probe(model: &SpectralModel, x: &CoefVector, s: &dyn SourceLike) -> Result<Membership> {
    if !s.certified() {
        return Err(Error::Uncertified(s.describe()));
    }
    model.check_len(x)?;
    let ln_floor = MEMBERSHIP_S_FLOOR.ln();
    let mut ln_v = Vec::with_capacity(model.dim);
    for (j, (&l, &xj)) in model.eigenvalues.iter().zip(&x.0).enumerate() {
        if xj == 0.0 {
            ln_v.push(f64::NEG_INFINITY);
            continue;
        }
        let ls = s.ln_s(l);
        if !(ls >= ln_floor) {
            return Ok(Membership::Outside {
                index: j + 1,
                reason: format!("s(lambda_{}) below {MEMBERSHIP_S_FLOOR:e}", j + 1),
            });
        }
        ln_v.push(xj.abs().ln() - ls);
    }
    let ln_factor = MEMBERSHIP_TERM_FACTOR.ln();
    let mut run_min = f64::INFINITY;
    for (j, &lv) in ln_v.iter().enumerate() {
        if lv == f64::NEG_INFINITY {
            continue;
        }
        if lv > run_min + ln_factor {
            return Ok(Membership::Outside {
                index: j + 1,
                reason: format!("|v_{}| exceeds {MEMBERSHIP_TERM_FACTOR} times an earlier term", j + 1),
            });
        }
        run_min = run_min.min(lv);
    }
    let sq: Vec<f64> = ln_v.iter().map(|v| 2.0 * v).collect();
    let total = log_sum_exp(&sq);
    if total == f64::NEG_INFINITY {
        return Ok(Membership::Inside { bound: 0.0 });
    }
    let q = model.dim - model.dim / 4;
    if q < model.dim {
        let tail = log_sum_exp(&sq[q..]);
        if tail - total >= MEMBERSHIP_TAIL_SHARE.ln() {
            return Ok(Membership::Outside {
                index: q + 1,
                reason: format!(
                    "last quartile carries {:.3} of the squared norm",
                    (tail - total).exp()
                ),
            });
        }
    }
    Ok(Membership::Inside {
        bound: (0.5 * total).exp(),
    })
}
