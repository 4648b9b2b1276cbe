//! One-hidden-layer networks represented as finite signed atomic measures
//! over neuron directions in the unit ball.

use crate::error::{Error, Result};
use crate::num::{norm2, spectral_norm, thin_svd, Matrix};

/// Atoms with smaller weight magnitude are dropped during maintenance.
pub const ATOM_DROP: f64 = 1e-14;

const UNIT_BALL_SLACK: f64 = 1e-10;

/// Where a dataset came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub stream_id: u64,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub a: Matrix,
    pub y: Vec<f64>,
    pub whitened: bool,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(a: Matrix, y: Vec<f64>) -> Result<Self> {
        if a.rows() != y.len() {
            return Err(Error::Shape(format!("{} samples but {} labels", a.rows(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("labels"));
        }
        Ok(Self { a, y, whitened: false, provenance: None })
    }

    /// Marks the dataset as whitened after checking that every nonzero
    /// singular value is one.
    pub fn mark_whitened(mut self) -> Result<Self> {
        let svd = thin_svd(&self.a)?;
        let ok = svd.singular_values[..svd.rank].iter().all(|s| (s - 1.0).abs() <= 1e-8);
        if !ok {
            return Err(Error::InvalidArgument("matrix is not whitened".into()));
        }
        self.whitened = true;
        Ok(self)
    }

    pub fn with_provenance(mut self, seed: u64, stream_id: u64) -> Self {
        self.provenance = Some(Provenance { seed, stream_id });
        self
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }
}

/// One neuron: output weight and input direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub weight: f64,
    pub direction: Vec<f64>,
}

/// `μ = Σ_k η_k δ_{θ_k}` with `‖θ_k‖₂ ≤ 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Result<Self> {
        let mut mu = Self::empty();
        for atom in atoms {
            mu.push(atom)?;
        }
        Ok(mu)
    }

    /// Appends an atom; rejects directions outside the unit ball and
    /// silently drops negligible weights.
    pub fn push(&mut self, atom: Atom) -> Result<()> {
        if !atom.weight.is_finite() || atom.direction.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("atom"));
        }
        if let Some(first) = self.atoms.first() {
            if first.direction.len() != atom.direction.len() {
                return Err(Error::Shape("atom directions of different lengths".into()));
            }
        }
        let norm = norm2(&atom.direction);
        if norm > 1.0 + UNIT_BALL_SLACK {
            return Err(Error::InvalidArgument(format!("atom direction norm {norm} exceeds 1")));
        }
        if atom.weight.abs() >= ATOM_DROP {
            self.atoms.push(atom);
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `‖η‖₁`, an upper bound on the variation norm of the represented network.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight.abs()).sum()
    }

    /// Multiplies every weight by `factor`, dropping atoms that become negligible.
    pub fn scale(&mut self, factor: f64) {
        for atom in &mut self.atoms {
            atom.weight *= factor;
        }
        self.atoms.retain(|a| a.weight.abs() >= ATOM_DROP);
    }

    /// Concatenation of the atom lists (the sum of the measures).
    pub fn union(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        let mut out = self.clone();
        for atom in &other.atoms {
            out.push(atom.clone())?;
        }
        Ok(out)
    }

    /// `(1−λ)·self + λ·other`.
    pub fn mix(&self, other: &AtomicMeasure, lambda: f64) -> Result<AtomicMeasure> {
        let mut left = self.clone();
        left.scale(1.0 - lambda);
        let mut right = other.clone();
        right.scale(lambda);
        left.union(&right)
    }

    /// Predictions `Σ_k η_k (Aθ_k)_+`.
    pub fn forward(&self, a: &Matrix) -> Result<Vec<f64>> {
        self.forward_with(a, |z| z.max(0.0))
    }

    /// Predictions with an arbitrary activation `Σ_k η_k σ(Aθ_k)`.
    pub fn forward_with(&self, a: &Matrix, activation: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; a.rows()];
        for atom in &self.atoms {
            let z = a.matvec(&atom.direction)?;
            for (o, zi) in out.iter_mut().zip(z) {
                *o += atom.weight * activation(zi);
            }
        }
        Ok(out)
    }
}

/// `Σ_i (f(a_i) − y_i)²`.
pub fn loss(mu: &AtomicMeasure, data: &Dataset) -> Result<f64> {
    let f = mu.forward(&data.a)?;
    Ok(f.iter().zip(&data.y).map(|(fi, yi)| (fi - yi) * (fi - yi)).sum())
}

/// Squared loss of a prediction vector.
pub fn loss_of_predictions(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(fi, yi)| (fi - yi) * (fi - yi)).sum()
}

/// Gradient coefficients `g_i = 2 (f(a_i) − y_i)` of the squared loss.
pub fn gradient(mu: &AtomicMeasure, data: &Dataset) -> Result<Vec<f64>> {
    let f = mu.forward(&data.a)?;
    Ok(f.iter().zip(&data.y).map(|(fi, yi)| 2.0 * (fi - yi)).collect())
}

/// `σ_max(A)²`, an upper bound on `sup_{‖θ‖≤1} Σ_i ((θᵀa_i)_+)²`.
pub fn r2_bound(a: &Matrix) -> Result<f64> {
    let s = spectral_norm(a)?;
    Ok(s * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{whiten, RngStream};

    fn atom(w: f64, d: &[f64]) -> Atom {
        Atom { weight: w, direction: d.to_vec() }
    }

    fn random_measure(rng: &mut RngStream, k: usize, d: usize) -> AtomicMeasure {
        AtomicMeasure::from_atoms((0..k).map(|_| {
            let r = rng.index(1000) as f64 / 1000.0;
            let dir: Vec<f64> = rng.unit_vector(d).into_iter().map(|x| x * r).collect();
            atom(rng.gaussian(), &dir)
        }))
        .unwrap()
    }

    #[test]
    fn forward_examples() {
        let a = Matrix::identity(2);
        assert_eq!(AtomicMeasure::empty().forward(&a).unwrap(), vec![0.0, 0.0]);
        let mu = AtomicMeasure::from_atoms([atom(1.0, &[1.0, 0.0])]).unwrap();
        assert_eq!(mu.forward(&a).unwrap(), vec![1.0, 0.0]);
        assert!(mu.forward(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn forward_is_linear_in_the_measure() {
        let mut rng = RngStream::new(1, 0);
        let a = rng.gaussian_matrix(6, 4);
        let mu = random_measure(&mut rng, 3, 4);
        let nu = random_measure(&mut rng, 5, 4);
        let sum = mu.union(&nu).unwrap().forward(&a).unwrap();
        let f1 = mu.forward(&a).unwrap();
        let f2 = nu.forward(&a).unwrap();
        for i in 0..6 {
            assert!((sum[i] - f1[i] - f2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_directions_outside_ball() {
        assert!(AtomicMeasure::from_atoms([atom(1.0, &[1.0, 1.0])]).is_err());
        let mut mu = AtomicMeasure::empty();
        mu.push(atom(1e-16, &[1.0, 0.0])).unwrap();
        assert!(mu.is_empty());
    }

    #[test]
    fn loss_examples() {
        let a = Matrix::identity(2);
        let y = vec![0.5, 2.0];
        let data = Dataset::new(a, y.clone()).unwrap();
        assert_eq!(loss(&AtomicMeasure::empty(), &data).unwrap(), 4.25);
        let exact = AtomicMeasure::from_atoms([atom(0.5, &[1.0, 0.0]), atom(2.0, &[0.0, 1.0])]).unwrap();
        assert_eq!(loss(&exact, &data).unwrap(), 0.0);

        // hand expansion: A = [[1,2],[3,-1]], θ = (0.6,0.8), η = 1.5
        // Aθ = (2.2, 1.0), f = (3.3, 1.5), y = (1, −1) → 2.3² + 2.5²
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0]]).unwrap();
        let data = Dataset::new(a, vec![1.0, -1.0]).unwrap();
        let mu = AtomicMeasure::from_atoms([atom(1.5, &[0.6, 0.8])]).unwrap();
        let expected = 2.3_f64.powi(2) + 2.5_f64.powi(2);
        assert!((loss(&mu, &data).unwrap() - expected).abs() < 1e-12);
        assert!(Dataset::new(Matrix::identity(2), vec![1.0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let data = Dataset::new(Matrix::identity(2), vec![1.0, -3.0]).unwrap();
        assert_eq!(gradient(&AtomicMeasure::empty(), &data).unwrap(), vec![-2.0, 6.0]);
        let data = Dataset::new(Matrix::identity(2), vec![1.0, 0.0]).unwrap();
        let mu = AtomicMeasure::from_atoms([atom(1.0, &[1.0, 0.0])]).unwrap();
        assert_eq!(gradient(&mu, &data).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RngStream::new(2, 0);
        let h = 1e-6;
        for _ in 0..100 {
            let a = rng.gaussian_matrix(5, 3);
            let y = rng.gaussian_vec(5);
            let data = Dataset::new(a.clone(), y).unwrap();
            let mu = random_measure(&mut rng, 4, 3);
            let g = gradient(&mu, &data).unwrap();
            let k = rng.index(mu.len());
            let perturbed = |delta: f64| {
                let mut atoms = mu.atoms().to_vec();
                atoms[k].weight += delta;
                loss(&AtomicMeasure::from_atoms(atoms).unwrap(), &data).unwrap()
            };
            let fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let act: Vec<f64> = a.matvec(&mu.atoms()[k].direction).unwrap().iter().map(|z| z.max(0.0)).collect();
            let analytic: f64 = g.iter().zip(&act).map(|(gi, si)| gi * si).sum();
            let scale = analytic.abs().max(1e-3);
            assert!((fd - analytic).abs() <= 1e-4 * scale, "fd {fd} vs {analytic}");
        }
    }

    #[test]
    fn mixtures() {
        let mut rng = RngStream::new(3, 0);
        let a = rng.gaussian_matrix(8, 4);
        let data = Dataset::new(a, rng.gaussian_vec(8)).unwrap();
        for _ in 0..20 {
            let mu = random_measure(&mut rng, 3, 4);
            let nu = random_measure(&mut rng, 2, 4);
            for lambda in [0.25, 0.5, 0.75] {
                let mix = mu.mix(&nu, lambda).unwrap();
                let tv = (1.0 - lambda) * mu.total_variation() + lambda * nu.total_variation();
                assert_eq!(mix.len(), mu.len() + nu.len());
                assert!((mix.total_variation() - tv).abs() <= 1e-15 * tv.max(1.0));
                let l = loss(&mix, &data).unwrap();
                let rhs = (1.0 - lambda) * loss(&mu, &data).unwrap() + lambda * loss(&nu, &data).unwrap();
                assert!(l <= rhs + 1e-9);
            }
        }
    }

    #[test]
    fn r2_examples() {
        assert!((r2_bound(&Matrix::identity(2)).unwrap() - 1.0).abs() < 1e-14);
        assert!((r2_bound(&Matrix::identity(2).scale(3.0)).unwrap() - 9.0).abs() < 1e-12);
        let w = whiten(&RngStream::new(5, 0).gaussian_matrix(20, 25)).unwrap();
        assert!((r2_bound(&w).unwrap() - 1.0).abs() < 1e-8);
        let data = Dataset::new(w, vec![0.0; 20]).unwrap().mark_whitened().unwrap();
        assert!(data.whitened);
    }
}
