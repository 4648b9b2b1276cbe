//! Spike-free certification.
//!
//! For a full-row-rank `A` with `n ≤ d`, the data matrix is spike-free when
//! `max_{z ∈ [0,1]ⁿ} ‖A† diag(z) A‖₂ ≤ 1`. Writing `B_z = A† diag(z) A` and
//! `M(z) = [[0, B_z], [B_zᵀ, 0]]`, this is the matrix cube condition
//! `I + M(z) ⪰ 0` for all `z` in the box. Its semidefinite relaxation asks for
//! symmetric `X_1..X_n` with
//!
//! ```text
//! X_i ⪰ (ρ/2) M(e_i),   X_i ⪰ −(ρ/2) M(e_i),   Σ X_i ⪯ I + ½ M(𝟙)
//! ```
//!
//! and feasibility at `ρ = 1` certifies the condition. Feasibility is sought
//! by Dykstra's alternating projections; a run that does not find a point
//! within budget proves nothing, hence the two-valued [`CertStatus`].

use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::num::{
    min_eigenvalue, norm2, psd_abs, psd_project, pseudo_inverse, spectral_norm, thin_svd, Matrix,
    RngStream,
};

/// Slack eigenvalues at or above `-FEASIBILITY_TOL` count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const DEFAULT_BUDGET: usize = 5000;
pub const DEFAULT_RHO: f64 = 1.0;

/// The relaxation data: the rank-two blocks `M(e_i)` and the right-hand side
/// `I + ½ M(𝟙)`, all `2d x 2d`.
#[derive(Debug, Clone)]
pub struct CubeSystem {
    pub m: Vec<Matrix>,
    pub b: Matrix,
    pub rho: f64,
}

impl CubeSystem {
    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn dim(&self) -> usize {
        self.b.rows()
    }

    /// Smallest eigenvalue over all `2n + 1` slack matrices of a candidate
    /// tuple, recomputed from scratch.
    pub fn min_slack(&self, xs: &[Matrix]) -> Result<f64> {
        if xs.len() != self.n() {
            return Err(Error::Shape(format!("{} blocks for {} constraints", xs.len(), self.n())));
        }
        let mut worst = f64::INFINITY;
        let mut sum = Matrix::zeros(self.dim(), self.dim());
        for (x, m) in xs.iter().zip(&self.m) {
            let c = m.scale(0.5 * self.rho);
            worst = worst.min(min_eigenvalue(&x.sub(&c))?);
            worst = worst.min(min_eigenvalue(&x.add(&c))?);
            sum.add_assign(x);
        }
        worst = worst.min(min_eigenvalue(&self.b.sub(&sum))?);
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertStatus {
    CertifiedFeasible,
    BudgetExhausted,
}

impl CertStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CertStatus::CertifiedFeasible => "certified_feasible",
            CertStatus::BudgetExhausted => "budget_exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertificateReport {
    pub status: CertStatus,
    /// Smallest slack eigenvalue at termination (negative when violated).
    pub max_violation: f64,
    pub sweeps: usize,
    /// The feasible tuple, when certified.
    pub witness: Option<Vec<Matrix>>,
    pub rho: f64,
}

impl CertificateReport {
    /// At `ρ = 2/π` a failed relaxation suggests the cube condition itself
    /// fails for some `z`: the blocks have rank two, so the relaxation is
    /// tight up to that factor. Only a hint, no dual certificate is built.
    pub fn cube_condition_likely_fails(&self) -> bool {
        self.status == CertStatus::BudgetExhausted && (self.rho - FRAC_2_PI).abs() < 1e-12
    }
}

pub fn build_cube_system(a: &Matrix, rho: f64) -> Result<CubeSystem> {
    let (n, d) = (a.rows(), a.cols());
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
    }
    if n > d {
        return Err(Error::InvalidArgument(format!("cube relaxation needs n <= d, got n={n}, d={d}")));
    }
    let rank = thin_svd(a)?.rank;
    if rank < n {
        return Err(Error::RankDeficient { rank, expected: n });
    }
    let pinv = pseudo_inverse(a)?;
    let mut m = Vec::with_capacity(n);
    let mut m_all = Matrix::zeros(2 * d, 2 * d);
    for i in 0..n {
        // B_{e_i} = (A†)_{:,i} a_iᵀ
        let left = pinv.col(i);
        let right = a.row(i);
        let mut mi = Matrix::zeros(2 * d, 2 * d);
        for r in 0..d {
            for c in 0..d {
                let v = left[r] * right[c];
                mi[(r, d + c)] = v;
                mi[(d + c, r)] = v;
            }
        }
        m_all.add_assign(&mi);
        m.push(mi);
    }
    let b = Matrix::identity(2 * d).add(&m_all.scale(0.5));
    Ok(CubeSystem { m, b, rho })
}

/// Frobenius projection of a tuple onto `{Σ X_i ⪯ B}`:
/// `X_i ← X_i − (1/n) (Σ X_j − B)_+`.
pub fn project_sum_constraint(xs: &mut [Matrix], b: &Matrix) -> Result<()> {
    let n = xs.len() as f64;
    let mut excess = b.scale(-1.0);
    for x in xs.iter() {
        excess.add_assign(x);
    }
    let correction = psd_project(&excess)?.scale(1.0 / n);
    for x in xs.iter_mut() {
        x.sub_assign(&correction);
    }
    Ok(())
}

/// Projection onto `{X ⪰ C}`.
fn project_above(y: &Matrix, c: &Matrix) -> Result<Matrix> {
    Ok(c.add(&psd_project(&y.sub(c))?))
}

/// Quick violation check that stops at the first constraint known to fail.
fn first_violation(system: &CubeSystem, xs: &[Matrix], bounds: &[Matrix]) -> Result<Option<f64>> {
    let mut worst = f64::INFINITY;
    let mut sum = Matrix::zeros(system.dim(), system.dim());
    for (x, c) in xs.iter().zip(bounds) {
        for lower in [x.sub(c), x.add(c)] {
            let e = min_eigenvalue(&lower)?;
            if e < -FEASIBILITY_TOL {
                return Ok(Some(e));
            }
            worst = worst.min(e);
        }
        sum.add_assign(x);
    }
    let e = min_eigenvalue(&system.b.sub(&sum))?;
    if e < -FEASIBILITY_TOL {
        return Ok(Some(e));
    }
    Ok(if worst.min(e) < -FEASIBILITY_TOL { Some(worst.min(e)) } else { None })
}

/// Dykstra's alternating projections over the `2n + 1` constraint sets,
/// started from `X_i = (ρ/2)|M(e_i)|` (which satisfies every one-sided
/// constraint). Stops as soon as every slack eigenvalue is `≥ −1e-7`.
pub fn certify_spike_free(a: &Matrix, rho: f64, budget: usize) -> Result<CertificateReport> {
    let system = build_cube_system(a, rho)?;
    certify_system(&system, budget)
}

pub fn certify_system(system: &CubeSystem, budget: usize) -> Result<CertificateReport> {
    let n = system.n();
    let dim = system.dim();
    let bounds: Vec<Matrix> = system.m.iter().map(|m| m.scale(0.5 * system.rho)).collect();
    let mut xs: Vec<Matrix> = bounds.iter().map(psd_abs).collect::<Result<_>>()?;

    let done = |xs: &[Matrix], sweeps: usize| -> Result<Option<CertificateReport>> {
        Ok(match first_violation(system, xs, &bounds)? {
            Some(_) => None,
            None => Some(CertificateReport {
                status: CertStatus::CertifiedFeasible,
                max_violation: system.min_slack(xs)?,
                sweeps,
                witness: Some(xs.to_vec()),
                rho: system.rho,
            }),
        })
    };
    if let Some(report) = done(&xs, 0)? {
        return Ok(report);
    }

    let mut inc_upper = vec![Matrix::zeros(dim, dim); n];
    let mut inc_lower = vec![Matrix::zeros(dim, dim); n];
    let mut inc_sum = Matrix::zeros(dim, dim);
    let neg_bounds: Vec<Matrix> = bounds.iter().map(|c| c.scale(-1.0)).collect();

    for sweep in 1..=budget {
        for i in 0..n {
            let y = xs[i].add(&inc_upper[i]);
            xs[i] = project_above(&y, &bounds[i])?;
            inc_upper[i] = y.sub(&xs[i]);

            let y = xs[i].add(&inc_lower[i]);
            xs[i] = project_above(&y, &neg_bounds[i])?;
            inc_lower[i] = y.sub(&xs[i]);
        }
        // the sum-set increment is the same matrix in every block
        for x in xs.iter_mut() {
            x.add_assign(&inc_sum);
        }
        let before: Vec<Matrix> = xs.clone();
        project_sum_constraint(&mut xs, &system.b)?;
        inc_sum = before[0].sub(&xs[0]);

        if let Some(report) = done(&xs, sweep)? {
            return Ok(report);
        }
    }
    Ok(CertificateReport {
        status: CertStatus::BudgetExhausted,
        max_violation: system.min_slack(&xs)?,
        sweeps: budget,
        witness: None,
        rho: system.rho,
    })
}

const FALSIFY_STEPS: usize = 500;

/// Multi-start lower bound on `max_{‖u‖≤1} ‖A†(Au)_+‖₂²`.
///
/// A value above `1 + 1e-6` shows the sufficient condition
/// `max ‖A†(Au)_+‖ ≤ 1` fails; it does not show that `A` is not spike-free.
pub fn spikefree_falsify(a: &Matrix, restarts: usize, rng: &mut RngStream) -> f64 {
    let d = a.cols();
    let (Ok(pinv), Ok(smax)) = (pseudo_inverse(a), spectral_norm(a)) else {
        return 0.0;
    };
    if smax == 0.0 {
        return 0.0;
    }
    let step = 1.0 / smax.powi(4);
    let objective = |u: &[f64]| -> (f64, Vec<f64>, Vec<f64>) {
        let z = a.matvec(u).expect("shape");
        let zp: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
        let w = pinv.matvec(&zp).expect("shape");
        (norm2(&w).powi(2), z, w)
    };
    let mut best = 0.0_f64;
    for _ in 0..restarts {
        let mut u = rng.unit_vector(d);
        for _ in 0..FALSIFY_STEPS {
            let (h, z, w) = objective(&u);
            best = best.max(h);
            // ∇h = 2 Aᵀ D A†ᵀ w with D the active-set mask
            let back = pinv.tr_matvec(&w).expect("shape");
            let masked: Vec<f64> = back.iter().zip(&z).map(|(b, zi)| if *zi > 0.0 { *b } else { 0.0 }).collect();
            let grad = a.tr_matvec(&masked).expect("shape");
            for (ui, gi) in u.iter_mut().zip(&grad) {
                *ui += 2.0 * step * gi;
            }
            let nu = norm2(&u);
            if nu == 0.0 {
                break;
            }
            u.iter_mut().for_each(|x| *x /= nu);
        }
        best = best.max(objective(&u).0);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{sym_eigenvalues, whiten};

    #[test]
    fn identity_blocks_have_two_unit_entries() {
        let d = 4;
        let sys = build_cube_system(&Matrix::identity(d), 1.0).unwrap();
        for (i, m) in sys.m.iter().enumerate() {
            for r in 0..2 * d {
                for c in 0..2 * d {
                    let expected = if (r, c) == (i, d + i) || (r, c) == (d + i, i) { 1.0 } else { 0.0 };
                    assert_eq!(m[(r, c)], expected);
                }
            }
        }
    }

    #[test]
    fn blocks_are_rank_two_with_paired_eigenvalues() {
        let mut rng = RngStream::new(10, 0);
        for _ in 0..5 {
            let n = 1 + rng.index(4);
            let d = n + rng.index(3);
            let a = rng.gaussian_matrix(n, d);
            let sys = build_cube_system(&a, 1.0).unwrap();
            let pinv = pseudo_inverse(&a).unwrap();
            for (i, m) in sys.m.iter().enumerate() {
                assert_eq!(m.asymmetry(), 0.0);
                let expected = norm2(&pinv.col(i)) * norm2(a.row(i));
                let vals = sym_eigenvalues(m).unwrap();
                assert!((vals[0] - expected).abs() < 1e-10);
                assert!((vals[2 * d - 1] + expected).abs() < 1e-10);
                assert!(vals[1..2 * d - 1].iter().all(|v| v.abs() < 1e-10));
            }
        }
    }

    #[test]
    fn rejects_tall_or_rank_deficient() {
        assert!(build_cube_system(&Matrix::zeros(3, 2), 1.0).is_err());
        let a = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(build_cube_system(&a, 1.0), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn closed_form_point_is_feasible_for_identity() {
        let d = 5;
        let sys = build_cube_system(&Matrix::identity(d), 1.0).unwrap();
        let xs: Vec<Matrix> = (0..d)
            .map(|i| {
                let mut x = Matrix::zeros(2 * d, 2 * d);
                x[(i, i)] = 0.5;
                x[(d + i, d + i)] = 0.5;
                x
            })
            .collect();
        assert!(sys.min_slack(&xs).unwrap() >= -1e-12);
    }

    #[test]
    fn identity_is_certified() {
        let report = certify_spike_free(&Matrix::identity(10), 1.0, DEFAULT_BUDGET).unwrap();
        assert_eq!(report.status, CertStatus::CertifiedFeasible);
        assert!(report.max_violation >= -FEASIBILITY_TOL);
    }

    #[test]
    fn whitened_gaussians_are_certified_and_witness_rechecks() {
        for (n, seed) in [(5, 0), (10, 1), (3, 2)] {
            let a = whiten(&RngStream::new(seed, 0).gaussian_matrix(n, 10)).unwrap();
            let report = certify_spike_free(&a, 1.0, DEFAULT_BUDGET).unwrap();
            assert_eq!(report.status, CertStatus::CertifiedFeasible);
            let sys = build_cube_system(&a, 1.0).unwrap();
            assert!(sys.min_slack(report.witness.as_ref().unwrap()).unwrap() >= -1e-6);
        }
    }

    #[test]
    fn certification_is_monotone_in_rho() {
        let mut rng = RngStream::new(12, 0);
        for k in 0..10 {
            let n = 1 + rng.index(3);
            let raw = rng.gaussian_matrix(n, 4);
            let a = if k % 2 == 0 { whiten(&raw).unwrap() } else { raw };
            let hi = certify_spike_free(&a, 1.0, 300).unwrap();
            if hi.status == CertStatus::CertifiedFeasible {
                let lo = certify_spike_free(&a, 0.5, 300).unwrap();
                assert_eq!(lo.status, CertStatus::CertifiedFeasible);
            }
        }
    }

    #[test]
    fn sum_projection_hand_cases() {
        // X1 = X2 = diag(1,0), B = I: excess diag(1,−1) → each block loses diag(½,0)
        let b = Matrix::identity(2);
        let mut xs = vec![Matrix::from_diag(&[1.0, 0.0]); 2];
        project_sum_constraint(&mut xs, &b).unwrap();
        for x in &xs {
            assert!(x.sub(&Matrix::from_diag(&[0.5, 0.0])).max_abs() < 1e-15);
        }

        // already feasible: unchanged
        let mut xs = vec![Matrix::from_diag(&[0.25, 0.25]); 2];
        let before = xs.clone();
        project_sum_constraint(&mut xs, &b).unwrap();
        assert!(xs[0].sub(&before[0]).max_abs() < 1e-15);

        // off-diagonal excess: sum = [[1,2],[2,1]] − ... single block, B = 0
        // eigenvalues 3 and −1 → keep only the −1 part: [[−½, ½],[½, −½]]
        let mut xs = vec![Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap()];
        project_sum_constraint(&mut xs, &Matrix::zeros(2, 2)).unwrap();
        let expected = Matrix::from_rows(&[vec![-0.5, 0.5], vec![0.5, -0.5]]).unwrap();
        assert!(xs[0].sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn sum_projection_is_feasible_and_nearest() {
        let mut rng = RngStream::new(13, 0);
        let sym = |rng: &mut RngStream, k: usize| {
            let g = rng.gaussian_matrix(k, k);
            g.add(&g.transpose()).scale(0.5)
        };
        for _ in 0..20 {
            let b = sym(&mut rng, 4);
            let orig: Vec<Matrix> = (0..3).map(|_| sym(&mut rng, 4)).collect();
            let mut xs = orig.clone();
            project_sum_constraint(&mut xs, &b).unwrap();
            let mut sum = Matrix::zeros(4, 4);
            xs.iter().for_each(|x| sum.add_assign(x));
            assert!(min_eigenvalue(&b.sub(&sum)).unwrap() >= -1e-8);
            let dist = |ys: &[Matrix]| ys.iter().zip(&orig).map(|(y, x)| y.sub(x).frobenius_norm().powi(2)).sum::<f64>();
            let best = dist(&xs);
            // feasible perturbations of the projection never get closer
            for _ in 0..20 {
                let mut ys: Vec<Matrix> = xs.iter().map(|x| x.add(&sym(&mut rng, 4).scale(0.1))).collect();
                project_sum_constraint(&mut ys, &b).unwrap();
                assert!(dist(&ys) >= best - 1e-9);
            }
        }
    }

    #[test]
    fn rho_two_over_pi_flag() {
        let report = CertificateReport {
            status: CertStatus::BudgetExhausted,
            max_violation: -1.0,
            sweeps: 1,
            witness: None,
            rho: FRAC_2_PI,
        };
        assert!(report.cube_condition_likely_fails());
    }

    #[test]
    fn falsify_examples() {
        let mut rng = RngStream::new(14, 0);
        let v = spikefree_falsify(&Matrix::identity(2), 20, &mut rng);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
        let v = spikefree_falsify(&Matrix::identity(2).scale(2.0), 20, &mut rng);
        assert!((v - 1.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn falsify_finds_violations_on_raw_gaussians() {
        let mut hits = 0;
        for seed in 0..10 {
            let a = RngStream::new(seed, 0).gaussian_matrix(10, 10);
            let v = spikefree_falsify(&a, 100, &mut RngStream::new(seed, 1));
            if v > 1.0 + 1e-6 {
                hits += 1;
            }
        }
        assert!(hits >= 8, "only {hits}/10 falsified");
    }
}
