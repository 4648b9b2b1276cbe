//! Thin SVD through the eigendecomposition of the smaller Gram matrix, and
//! the whitening / pseudoinverse built on it.

use super::eigen::sym_eigen;
use super::matrix::{axpy, dot, norm2, Matrix};
use crate::error::{Error, Result};

/// Singular values below `RANK_CUTOFF * s_max` count as zero, everywhere.
pub const RANK_CUTOFF: f64 = 1e-10;

/// `A = U diag(s) Vᵀ` with `k = min(n, d)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
    pub rank: usize,
}

impl SvdFactors {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Smallest singular value among the `min(n, d)` reported.
    pub fn sigma_min(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn reconstruct(&self) -> Matrix {
        let (n, d) = (self.u.rows(), self.v.rows());
        let mut out = Matrix::zeros(n, d);
        for (k, &s) in self.singular_values.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let uik = s * self.u[(i, k)];
                for j in 0..d {
                    out[(i, j)] += uik * self.v[(j, k)];
                }
            }
        }
        out
    }
}

pub fn thin_svd(a: &Matrix) -> Result<SvdFactors> {
    let (n, d) = (a.rows(), a.cols());
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument("SVD of an empty matrix".into()));
    }
    // eigenvectors of the small Gram matrix give one side; the other side is
    // recovered as A v / s (or Aᵀ u / s)
    let tall = n >= d;
    let gram = if tall { a.gram() } else { a.transpose().gram() };
    let eig = sym_eigen(&gram)?;
    let k = n.min(d);
    let s_raw: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let s_max = s_raw[0];
    let rank = s_raw.iter().take_while(|&&s| s > RANK_CUTOFF * s_max && s > 0.0).count();
    let singular_values: Vec<f64> =
        s_raw.iter().enumerate().map(|(i, &s)| if i < rank { s } else { 0.0 }).collect();

    let known = eig.vectors;
    let mut other = Matrix::zeros(if tall { n } else { d }, k);
    for i in 0..rank {
        let col = known.col(i);
        let mapped = if tall { a.matvec(&col)? } else { a.tr_matvec(&col)? };
        let inv = 1.0 / singular_values[i];
        other.set_col(i, &mapped.iter().map(|x| x * inv).collect::<Vec<_>>());
    }
    reorthonormalize(&mut other, rank);
    complete_orthonormal(&mut other, rank);

    let (u, v) = if tall { (other, known) } else { (known, other) };
    Ok(SvdFactors { u, singular_values, v, rank })
}

/// Replaces the data matrix by `U_r V_rᵀ`, setting every nonzero singular
/// value to one.
pub fn whiten(a: &Matrix) -> Result<Matrix> {
    let svd = thin_svd(a)?;
    if svd.rank == 0 {
        return Err(Error::InvalidArgument("cannot whiten a zero matrix".into()));
    }
    let (n, d) = (a.rows(), a.cols());
    let mut out = Matrix::zeros(n, d);
    for k in 0..svd.rank {
        for i in 0..n {
            let uik = svd.u[(i, k)];
            for j in 0..d {
                out[(i, j)] += uik * svd.v[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Moore-Penrose pseudoinverse `V_r S_r⁻¹ U_rᵀ` (`d x n`).
pub fn pseudo_inverse(a: &Matrix) -> Result<Matrix> {
    let svd = thin_svd(a)?;
    let (n, d) = (a.rows(), a.cols());
    let mut out = Matrix::zeros(d, n);
    for k in 0..svd.rank {
        let inv = 1.0 / svd.singular_values[k];
        for i in 0..d {
            let vik = inv * svd.v[(i, k)];
            for j in 0..n {
                out[(i, j)] += vik * svd.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Largest singular value.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(thin_svd(a)?.sigma_max())
}

/// Modified Gram-Schmidt over the first `r` columns. Corrects the loss of
/// orthogonality that `A v / s` suffers for small `s`.
fn reorthonormalize(q: &mut Matrix, r: usize) {
    for j in 0..r {
        let mut c = q.col(j);
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.col(i);
                let h = dot(&qi, &c);
                axpy(-h, &qi, &mut c);
            }
        }
        let nc = norm2(&c);
        if nc > 0.0 {
            c.iter_mut().for_each(|x| *x /= nc);
        }
        q.set_col(j, &c);
    }
}

/// Fills columns `r..` with an orthonormal completion of the first `r`.
fn complete_orthonormal(q: &mut Matrix, r: usize) {
    let m = q.rows();
    let mut filled = r;
    let mut candidate = 0;
    while filled < q.cols() && candidate < m {
        let mut c = vec![0.0; m];
        c[candidate] = 1.0;
        candidate += 1;
        for _ in 0..2 {
            for i in 0..filled {
                let qi = q.col(i);
                let h = dot(&qi, &c);
                axpy(-h, &qi, &mut c);
            }
        }
        let nc = norm2(&c);
        if nc < 1e-3 {
            continue;
        }
        c.iter_mut().for_each(|x| *x /= nc);
        q.set_col(filled, &c);
        filled += 1;
    }
}
