//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Each rotation annihilates one off-diagonal pair; sweeps repeat over all
//! pairs until the off-diagonal mass is at rounding level. Convergence is
//! quadratic once the off-diagonal part is small, so a handful of sweeps
//! suffices for the sizes used here (at most a few hundred).

use super::matrix::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues in nonincreasing order.
/// Column `k` of `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n, n);
        for (k, &lk) in mapped.iter().enumerate() {
            if lk == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = lk * v[(i, k)];
                if vik == 0.0 {
                    continue;
                }
                for j in i..n {
                    out[(i, j)] += vik * v[(j, k)];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }
}

/// Full eigendecomposition. Input must be square; only symmetry up to
/// rounding is assumed (the upper triangle is mirrored first).
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    let (values, vectors) = jacobi(a, true)?;
    Ok(SymEigen { values, vectors: vectors.expect("vectors requested") })
}

/// Eigenvalues only, nonincreasing.
pub fn sym_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    Ok(jacobi(a, false)?.0)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Matrix) -> Result<f64> {
    Ok(sym_eigenvalues(a)?.last().copied().unwrap_or(0.0))
}

fn jacobi(a: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
    if !a.is_square() {
        return Err(Error::Shape(format!("eigendecomposition of {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut w: Vec<f64> = m.as_slice().to_vec();
    let mut v = if want_vectors { Some(Matrix::identity(n).as_slice().to_vec()) } else { None };

    let fro2: f64 = w.iter().map(|x| x * x).sum();
    if !fro2.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let tiny = f64::MIN_POSITIVE;
    let target = (f64::EPSILON * f64::EPSILON) * fro2;

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += w[p * n + q] * w[p * n + q];
            }
        }
        if 2.0 * off <= target || off <= tiny {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[p * n + q];
                if apq.abs() <= tiny {
                    continue;
                }
                let app = w[p * n + p];
                let aqq = w[q * n + q];
                // negligible relative to both diagonal entries
                if apq.abs() < 1e-3 * f64::EPSILON * (app.abs().min(aqq.abs())) {
                    w[p * n + q] = 0.0;
                    w[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                w[p * n + p] = app - t * apq;
                w[q * n + q] = aqq + t * apq;
                w[p * n + q] = 0.0;
                w[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = w[k * n + p];
                    let akq = w[k * n + q];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    w[k * n + p] = nkp;
                    w[p * n + k] = nkp;
                    w[k * n + q] = nkq;
                    w[q * n + k] = nkq;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { routine: "jacobi eigendecomposition", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j * n + j].total_cmp(&w[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| w[i * n + i]).collect();
    let vectors = v.map(|v| Matrix::from_fn(n, n, |i, k| v[i * n + order[k]]));
    Ok((values, vectors))
}
