use super::eigen::sym_eigen;
use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Frobenius-nearest positive semidefinite matrix: negative eigenvalues
/// clipped to zero.
pub fn psd_project(s: &Matrix) -> Result<Matrix> {
    if !s.is_square() {
        return Err(Error::Shape(format!("psd projection of {}x{}", s.rows(), s.cols())));
    }
    let scale = s.max_abs().max(1.0);
    if s.asymmetry() > 1e-12 * scale {
        return Err(Error::InvalidArgument("psd projection of a non-symmetric matrix".into()));
    }
    let eig = sym_eigen(s)?;
    if eig.values.last().is_none_or(|&l| l >= 0.0) {
        let mut out = s.clone();
        out.symmetrize();
        return Ok(out);
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)))
}

/// Positive and negative parts `(P, N)` with `S = P − N`.
pub fn psd_split(s: &Matrix) -> Result<(Matrix, Matrix)> {
    let p = psd_project(s)?;
    let n = p.sub(s);
    Ok((p, n))
}

/// `|S| = V |Λ| Vᵀ`.
pub fn psd_abs(s: &Matrix) -> Result<Matrix> {
    Ok(sym_eigen(s)?.reconstruct_with(f64::abs))
}
