//! Frank-Wolfe training of one-hidden-layer ReLU networks over a
//! variation-norm ball.
//!
//! The network is an atomic measure over unit-ball neuron directions. On
//! spike-free data (e.g. whitened samples with `n ≤ d`) the linear
//! minimization oracle is a second-order cone program, solved here exactly
//! by projecting onto the cone `{θ : Aθ ≥ 0}`. The [`certify`] module checks
//! spike-freeness through a matrix-cube semidefinite relaxation, and [`fw`]
//! holds both the deterministic and the stochastic training loops.

pub mod certify;
pub mod error;
pub mod experiments;
pub mod fw;
pub mod lmo;
pub mod model;
pub mod num;

pub use error::{Error, Result};
