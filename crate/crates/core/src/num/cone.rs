use super::matrix::Matrix;
use super::nnls::nnls;
use crate::error::{Error, Result};

/// Euclidean projection of `c` onto the polyhedral cone `K = {θ : Aθ ≥ 0}`.
///
/// The polar cone is `{−Aᵀλ : λ ≥ 0}`, so by Moreau's decomposition
/// `Π_K(c) = c + Aᵀλ*` with `λ* = argmin_{λ≥0} ‖c + Aᵀλ‖₂`.
pub fn project_cone(a: &Matrix, c: &[f64]) -> Result<Vec<f64>> {
    if c.len() != a.cols() {
        return Err(Error::Shape(format!(
            "cone projection: vector of length {} for {} columns",
            c.len(),
            a.cols()
        )));
    }
    let neg_at = a.transpose().scale(-1.0);
    let lambda = nnls(&neg_at, c)?;
    let push = a.tr_matvec(&lambda)?;
    Ok(c.iter().zip(&push).map(|(ci, pi)| ci + pi).collect())
}
