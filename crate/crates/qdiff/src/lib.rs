//! Numerical laboratory for space-time ("all-at-once") linear systems of
//! classical difference schemes: assembly, singular-value analysis against
//! closed-form bounds, time-marching reference solvers with operation
//! counting, an ideal statevector solver for the resulting Hermitian
//! systems, and benchmark sweeps with scaling-exponent fits.

pub mod assemble;
pub mod bench;
pub mod config;
pub mod error;
pub mod hhl;
pub mod manufactured;
pub mod march;
pub mod sparse;
pub mod spectra;

pub use config::{
    apply_step_policy, step_size_policy, validate_config, Equation, ProblemConfig, Scheme,
    Violation,
};
pub use error::{Error, Result};
pub use sparse::SparseMatrix;
