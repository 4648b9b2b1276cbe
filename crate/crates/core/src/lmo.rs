//! Linear minimization oracle over the variation-norm ball for ReLU neurons.
//!
//! For spike-free data the oracle `min Σ g_i f(a_i)` over `γ₁(f) ≤ δ` reduces
//! to the two cone programs `max ±gᵀAθ` over `{‖θ‖ ≤ 1, Aθ ≥ 0}`. A linear
//! functional `cᵀθ` over a closed convex cone intersected with the unit ball
//! is maximized at `Π_K(c)/‖Π_K(c)‖` with value `‖Π_K(c)‖`, so each branch
//! costs one cone projection.

use crate::error::{Error, Result};
use crate::num::{norm2, project_cone, spectral_norm, Matrix, RngStream};

/// Projection norms at or below this are treated as a trivial cone.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LmoOutcome {
    /// Unit-norm neuron direction, or zero when degenerate.
    pub direction: Vec<f64>,
    /// `+1` when the `+gᵀAθ` branch won, `−1` otherwise.
    pub sign: f64,
    /// Output weight of the returned atom: `−sign · δ`.
    pub atom_weight: f64,
    /// `Σ_i g_i f_d(a_i) = −δ · max(v₊, v₋)`.
    pub value: f64,
    pub degenerate: bool,
}

impl LmoOutcome {
    /// Predictions of the oracle atom, `atom_weight · (Aθ*)_+`.
    pub fn predictions(&self, a: &Matrix) -> Result<Vec<f64>> {
        if self.degenerate {
            return Ok(vec![0.0; a.rows()]);
        }
        Ok(a.matvec(&self.direction)?.into_iter().map(|z| self.atom_weight * z.max(0.0)).collect())
    }
}

/// Exact oracle on spike-free matrices (a restriction of the true oracle otherwise).
pub fn lmo_relu(a: &Matrix, g: &[f64], delta: f64) -> Result<LmoOutcome> {
    if g.len() != a.rows() {
        return Err(Error::Shape(format!("gradient of length {} for {} samples", g.len(), a.rows())));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    let c = a.tr_matvec(g)?;
    let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
    let plus = project_cone(a, &c)?;
    let minus = project_cone(a, &neg_c)?;
    let (v_plus, v_minus) = (norm2(&plus), norm2(&minus));

    // ties go to the + branch
    let (sign, proj, v) = if v_plus >= v_minus { (1.0, plus, v_plus) } else { (-1.0, minus, v_minus) };
    if v <= DEGENERACY_TOL {
        return Ok(LmoOutcome {
            direction: vec![0.0; a.cols()],
            sign: 1.0,
            atom_weight: -delta,
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(LmoOutcome {
        direction: proj.iter().map(|x| x / v).collect(),
        sign,
        atom_weight: -sign * delta,
        value: -delta * v,
        degenerate: false,
    })
}

/// Whether `{θ : Aθ ≥ 0}` contains a nonzero point, tested through
/// `‖Π_K(Aᵀ𝟙)‖ > 1e-9`.
///
/// Exact when `A` has full column rank: any nonzero `θ ∈ K` then has
/// `Aθ ≥ 0, Aθ ≠ 0`, so `(Aᵀ𝟙)ᵀθ > 0` and the projection cannot vanish.
pub fn cone_nontrivial(a: &Matrix) -> Result<bool> {
    let c = a.tr_matvec(&vec![1.0; a.rows()])?;
    Ok(norm2(&project_cone(a, &c)?) > DEGENERACY_TOL)
}

const BRUTE_STEPS: usize = 500;

/// Multi-start lower bound on `max_{‖θ‖≤1} |gᵀ(Aθ)_+|`.
///
/// From each random unit start, runs projected (renormalized) subgradient
/// ascent on `+gᵀ(Aθ)_+` and on `−gᵀ(Aθ)_+`, step `1/σ_max²`, and keeps the
/// best value seen along the way. Reference oracle for small `d`.
pub fn lmo_bruteforce(a: &Matrix, g: &[f64], restarts: usize, rng: &mut RngStream) -> f64 {
    assert_eq!(g.len(), a.rows(), "gradient length must match sample count");
    let d = a.cols();
    let smax = spectral_norm(a).unwrap_or(0.0);
    if smax == 0.0 || g.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let step = 1.0 / (smax * smax);
    let value = |theta: &[f64], s: f64| -> f64 {
        let z = a.matvec(theta).expect("shape checked");
        s * z.iter().zip(g).map(|(zi, gi)| gi * zi.max(0.0)).sum::<f64>()
    };
    let mut best = 0.0_f64;
    for _ in 0..restarts {
        let start = rng.unit_vector(d);
        for s in [1.0, -1.0] {
            let mut theta = start.clone();
            best = best.max(value(&theta, s));
            for _ in 0..BRUTE_STEPS {
                let z = a.matvec(&theta).expect("shape checked");
                let active: Vec<f64> =
                    z.iter().zip(g).map(|(&zi, &gi)| if zi > 0.0 { s * gi } else { 0.0 }).collect();
                let sub = a.tr_matvec(&active).expect("shape checked");
                for (t, gi) in theta.iter_mut().zip(&sub) {
                    *t += step * gi;
                }
                let nt = norm2(&theta);
                if nt == 0.0 {
                    break;
                }
                theta.iter_mut().for_each(|t| *t /= nt);
                best = best.max(value(&theta, s));
            }
        }
    }
    best
}
