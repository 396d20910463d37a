//! One-sided Jacobi SVD for small dense matrices.

use serde::{Deserialize, Serialize};

use super::model::{Matrix, Provenance, SpectralModel};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 512;
pub const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    pub model: SpectralModel,
    /// `m x k` with orthonormal columns.
    pub u: Matrix,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `n x k` with orthonormal columns.
    pub v: Matrix,
    pub sweeps: usize,
}

impl SvdResult {
    /// `||A - U S V^T||_F / ||A||_F`.
    pub fn reconstruction_residual(&self, a: &Matrix) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..a.rows {
            for j in 0..a.cols {
                let mut s = 0.0;
                for (k, sk) in self.sigma.iter().enumerate() {
                    s += self.u.get(i, k) * sk * self.v.get(j, k);
                }
                let x = a.get(i, j);
                num += (x - s) * (x - s);
                den += x * x;
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

// Columns of `w` (m x n, column-major in `cols`) are orthogonalised in place;
// `v` accumulates the rotations.
fn jacobi(cols: &mut [Vec<f64>], v: &mut [Vec<f64>], tol: f64) -> Result<usize> {
    let n = cols.len();
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut a, mut b, mut g) = (0.0, 0.0, 0.0);
                for (x, y) in cols[p].iter().zip(&cols[q]) {
                    a += x * x;
                    b += y * y;
                    g += x * y;
                }
                if g == 0.0 || g.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
                let (lo, hi) = v.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (xp, xq) = (*x, *y);
                    *x = c * xp - s * xq;
                    *y = s * xp + c * xq;
                }
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Sweeps until no pair of columns has a normalised inner product above
/// `tol`. The spectral model holds `sigma_j^2` for the nonzero singular
/// values.
pub fn svd_decompose(a: &Matrix, tol: f64) -> Result<SvdResult> {
    if a.rows > MAX_DIM || a.cols > MAX_DIM {
        return Err(Error::DimensionCap {
            rows: a.rows,
            cols: a.cols,
            cap: MAX_DIM,
        });
    }
    if !(1e-14..=1e-8).contains(&tol) {
        return Err(Error::ParamOutOfRange {
            name: "tol".into(),
            value: tol,
            reason: "must lie in [1e-14, 1e-8]".into(),
        });
    }
    if a.rows == 0 || a.cols == 0 {
        return Err(Error::InvalidGrid("empty matrix".into()));
    }
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Parse("matrix has non-finite entries".into()));
    }
    let transposed = a.rows < a.cols;
    let w = if transposed { a.transpose() } else { a.clone() };
    let (m, n) = (w.rows, w.cols);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| w.get(i, j)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let sweeps = jacobi(&mut cols, &mut v, tol)?;

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let sigma: Vec<f64> = order.iter().map(|o| o.0).collect();
    let mut u = Matrix::zeros(m, n);
    let mut vm = Matrix::zeros(n, n);
    for (k, &(s, j)) in order.iter().enumerate() {
        for i in 0..m {
            u.set(i, k, if s > 0.0 { cols[j][i] / s } else { 0.0 });
        }
        for i in 0..n {
            vm.set(i, k, v[j][i]);
        }
    }
    let (u, v) = if transposed { (vm, u) } else { (u, vm) };
    let cut = sigma[0] * f64::EPSILON * m.max(n) as f64;
    let eig: Vec<f64> = sigma.iter().filter(|s| **s > cut).map(|s| s * s).collect();
    if eig.is_empty() {
        return Err(Error::Precondition("matrix is numerically zero".into()));
    }
    let model = SpectralModel::new(
        eig,
        Provenance::DenseSvd {
            matrix_id: a.label.clone(),
        },
    )?;
    Ok(SvdResult {
        model,
        u,
        sigma,
        v,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_input() {
        let a = Matrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let r = svd_decompose(&a, 1e-12).unwrap();
        assert_eq!(r.sigma, vec![3.0, 2.0, 1.0]);
        assert_eq!(r.model.eigenvalues, vec![9.0, 4.0, 1.0]);
    }

    #[test]
    fn permutation_input() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = svd_decompose(&a, 1e-12).unwrap();
        assert_relative_eq!(r.sigma[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.sigma[1], 1.0, max_relative = 1e-14);
        assert!(r.reconstruction_residual(&a) < 1e-14);
    }

    #[test]
    fn wide_matrix() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let r = svd_decompose(&a, 1e-12).unwrap();
        assert_eq!(r.sigma.len(), 2);
        assert!(r.reconstruction_residual(&a) < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        let a = Matrix::zeros(513, 2);
        assert!(matches!(svd_decompose(&a, 1e-12), Err(Error::DimensionCap { .. })));
        let b = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(svd_decompose(&b, 1e-3).is_err());
    }
}
