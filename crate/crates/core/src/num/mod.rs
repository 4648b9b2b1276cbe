//! Dense linear algebra, seeded sampling and projection primitives.

pub mod cone;
pub mod eigen;
pub mod matrix;
pub mod nnls;
pub mod psd;
pub mod rng;
pub mod svd;

pub use cone::project_cone;
pub use eigen::{min_eigenvalue, sym_eigen, sym_eigenvalues, SymEigen};
pub use matrix::{axpy, dot, norm2, relu, Matrix};
pub use nnls::nnls;
pub use psd::{psd_abs, psd_project, psd_split};
pub use rng::{seeded_gaussian, RngStream};
pub use svd::{pseudo_inverse, spectral_norm, thin_svd, whiten, SvdFactors, RANK_CUTOFF};
