//! Nonnegative least squares, Lawson-Hanson active set.

use super::matrix::{dot, norm2, Matrix};
use crate::error::{Error, Result};

/// `argmin_{λ ≥ 0} ‖M λ − b‖₂`.
///
/// Exits with the KKT conditions holding at rounding level: the dual vector
/// `w = Mᵀ(b − Mλ)` is nonpositive off the passive set and zero on it.
/// Fails with [`Error::NnlsBudget`] (carrying the best iterate) after
/// `10 · max(rows, cols)` outer iterations.
pub fn nnls(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (rows, k) = (m.rows(), m.cols());
    if b.len() != rows {
        return Err(Error::Shape(format!("nnls: {rows} rows against rhs of length {}", b.len())));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("nnls right-hand side"));
    }
    let mut x = vec![0.0; k];
    if k == 0 {
        return Ok(x);
    }
    let budget = 10 * rows.max(k);
    let scale = (m.frobenius_norm() * norm2(b)).max(1.0);
    let tol = 1e-13 * scale;

    // columns are accessed repeatedly; cache them
    let columns: Vec<Vec<f64>> = (0..k).map(|j| m.col(j)).collect();
    let mut passive = vec![false; k];
    let mut rejected = vec![false; k];
    let mut w = dual(m, b, &x)?;
    let mut outer = 0;

    loop {
        let entering = (0..k)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = entering else { break };
        outer += 1;
        if outer > budget {
            return Err(Error::NnlsBudget { iterations: budget, best: x });
        }
        passive[j] = true;

        let mut moved = false;
        let mut first = true;
        loop {
            let set: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let z = lstsq(&columns, &set, b);
            let z = match z {
                Some(z) => z,
                None => {
                    // entering column is numerically dependent on the passive set
                    passive[j] = false;
                    rejected[j] = true;
                    break;
                }
            };
            let zj = set.iter().position(|&i| i == j).map(|p| z[p]);
            if first && zj.is_some_and(|v| v <= 0.0) {
                passive[j] = false;
                rejected[j] = true;
                break;
            }
            first = false;
            if z.iter().all(|&v| v > 0.0) {
                for (&i, &v) in set.iter().zip(&z) {
                    x[i] = v;
                }
                moved = true;
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (&i, &v) in set.iter().zip(&z) {
                if v <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - v));
                }
            }
            for (&i, &v) in set.iter().zip(&z) {
                x[i] += alpha * (v - x[i]);
                if x[i] <= 1e-15 * (1.0 + v.abs()) || (v <= 0.0 && x[i] <= 0.0) {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            moved = true;
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        if moved {
            rejected.iter_mut().for_each(|r| *r = false);
        }
        w = dual(m, b, &x)?;
    }
    Ok(x)
}

fn dual(m: &Matrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mx = m.matvec(x)?;
    let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, ai)| bi - ai).collect();
    m.tr_matvec(&r)
}

/// Least squares on the listed columns through Householder QR. `None` when
/// the columns are numerically dependent.
fn lstsq(columns: &[Vec<f64>], set: &[usize], b: &[f64]) -> Option<Vec<f64>> {
    let m = b.len();
    let p = set.len();
    if p > m {
        return None;
    }
    // column-major working copy
    let mut a: Vec<Vec<f64>> = set.iter().map(|&j| columns[j].clone()).collect();
    let mut rhs = b.to_vec();
    let col_norms: Vec<f64> = a.iter().map(|c| norm2(c)).collect();
    for k in 0..p {
        let alpha = norm2(&a[k][k..]);
        if alpha <= 1e-12 * col_norms[k].max(f64::MIN_POSITIVE) {
            return None;
        }
        let sign = if a[k][k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2 = dot(&v, &v);
        for col in a.iter_mut().skip(k) {
            let h = 2.0 * dot(&v, &col[k..]) / vnorm2;
            for (ci, vi) in col[k..].iter_mut().zip(&v) {
                *ci -= h * vi;
            }
        }
        let h = 2.0 * dot(&v, &rhs[k..]) / vnorm2;
        for (ri, vi) in rhs[k..].iter_mut().zip(&v) {
            *ri -= h * vi;
        }
    }
    let mut z = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = rhs[i];
        for j in i + 1..p {
            s -= a[j][i] * z[j];
        }
        z[i] = s / a[i][i];
    }
    Some(z)
}
