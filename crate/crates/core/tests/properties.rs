use proptest::prelude::*;
use relufw::lmo::cone_nontrivial;
use relufw::num::{nnls, norm2, project_cone, thin_svd, whiten, RngStream};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn whitening_is_idempotent(seed in any::<u64>(), n in 1usize..25, d in 1usize..25) {
        let a = RngStream::new(seed, 0).gaussian_matrix(n, d);
        let w = whiten(&a).unwrap();
        let ww = whiten(&w).unwrap();
        prop_assert!(ww.sub(&w).max_abs() <= 1e-9);
        for s in thin_svd(&w).unwrap().singular_values.iter().filter(|s| **s > 0.0) {
            prop_assert!((s - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn projection_is_homogeneous_and_idempotent(
        seed in any::<u64>(), n in 1usize..20, d in 1usize..20, t in 0.01f64..100.0,
    ) {
        let mut rng = RngStream::new(seed, 0);
        let a = rng.gaussian_matrix(n, d);
        let c = rng.gaussian_vec(d);
        let p = project_cone(&a, &c).unwrap();
        let scaled: Vec<f64> = c.iter().map(|x| t * x).collect();
        let pt = project_cone(&a, &scaled).unwrap();
        let diff: Vec<f64> = pt.iter().zip(&p).map(|(x, y)| x - t * y).collect();
        prop_assert!(norm2(&diff) <= 1e-8 * t * norm2(&c));
        let pp = project_cone(&a, &p).unwrap();
        let again: Vec<f64> = pp.iter().zip(&p).map(|(x, y)| x - y).collect();
        prop_assert!(norm2(&again) <= 1e-8 * norm2(&c).max(1.0));
    }

    #[test]
    fn nnls_satisfies_kkt(seed in any::<u64>(), rows in 1usize..30, cols in 1usize..30) {
        let mut rng = RngStream::new(seed, 0);
        let m = rng.gaussian_matrix(rows, cols);
        let b = rng.gaussian_vec(rows);
        let x = nnls(&m, &b).unwrap();
        let r: Vec<f64> = m.matvec(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
        let grad = m.tr_matvec(&r).unwrap();
        for (g, xi) in grad.iter().zip(&x) {
            prop_assert!(*xi >= 0.0);
            prop_assert!(*g >= -1e-9);
            prop_assert!(*xi == 0.0 || g.abs() <= 1e-9);
        }
    }
}

/// Probability that `n` symmetric random hyperplanes through the origin in
/// general position leave a nontrivial cone in dimension `d`:
/// `2^{-(n-1)} Σ_{k<d} C(n-1, k)`.
fn wendel(n: usize, d: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..d.min(n) {
        if k > 0 {
            binom *= (n - k) as f64 / k as f64;
        }
        total += binom;
    }
    total / 2f64.powi(n as i32 - 1)
}

#[test]
fn wendel_oracle_values() {
    assert_eq!(wendel(20, 20), 1.0);
    assert!((wendel(40, 20) - 0.5).abs() < 1e-12);
    assert!(wendel(75, 20) < 1e-4);
}

#[test]
fn cone_test_tracks_wendel_formula() {
    let (d, trials) = (8, 400);
    for n in [8, 12, 16, 20, 24] {
        let successes = (0..trials)
            .filter(|&k| {
                let a = whiten(&RngStream::new(21, k).gaussian_matrix(n, d)).unwrap();
                cone_nontrivial(&a).unwrap()
            })
            .count();
        let p_hat = successes as f64 / trials as f64;
        let p = wendel(n, d);
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((p_hat - p).abs() <= 4.0 * se + 1.0 / trials as f64, "n={n}: {p_hat} vs {p}");
    }
}
