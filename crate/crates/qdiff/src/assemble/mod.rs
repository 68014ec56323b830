//! Space-time system assembly.
//!
//! Every scheme in the crate marches a per-step recurrence; stacking all time
//! levels into one unknown vector turns the march into a single linear system
//! `L S = F` whose matrix is block lower bidiagonal in time. This module
//! builds those systems for each scheme, plus the symmetric dilation used by
//! solvers that require a Hermitian matrix.

mod scalar;
mod stencils;
mod telegraph;

pub use scalar::{build_heat_system, build_ode_theta, build_upwind_hyperbolic, interior_points};
pub use stencils::{
    antisymmetric_central_1d, build_laplacian_1d, build_laplacian_dd, lower_shift_1d,
    upwind_step_operator,
};
pub use telegraph::{
    apply_imex_preconditioner, build_explicit_multiscale_system, build_imex_system,
    build_preconditioned_imex_system, build_penalized_system, build_relaxation_system,
    ApParameters, TelegraphData, Trace,
};

use crate::config::Scheme;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Diagonal rescaling applied to a sub-vector of the unknowns, recorded so
/// post-processing can undo it (the solution stores `u_factor * U` in the
/// U slots).
#[derive(Debug, Clone, PartialEq)]
pub struct VariableScaling {
    pub label: String,
    pub u_factor: f64,
}

/// The all-at-once pair `(L, F)` plus block metadata.
#[derive(Debug, Clone)]
pub struct SpaceTimeSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Unknowns per field per time step.
    pub block_size: usize,
    pub n_steps: usize,
    /// 1 for scalar equations, 2 for the two-field telegraph systems.
    pub n_fields: usize,
    pub scheme: Scheme,
    pub variable_scaling: Option<VariableScaling>,
}

impl SpaceTimeSystem {
    pub fn order(&self) -> usize {
        self.block_size * self.n_steps * self.n_fields
    }

    pub(crate) fn check(self) -> Result<Self> {
        if self.matrix.n_rows() != self.order() || self.matrix.n_cols() != self.order() {
            return Err(Error::numerical(format!(
                "assembled matrix order {} does not match block_size*n_steps*fields = {}",
                self.matrix.n_rows(),
                self.order()
            )));
        }
        if self.rhs.len() != self.order() {
            return Err(Error::numerical("rhs length does not match system order"));
        }
        Ok(self)
    }

    /// Flat index of unknown `i` of field `field` at step `k` (0-based step,
    /// step 0 holding the first unknown time level).
    pub fn index(&self, field: usize, step: usize, i: usize) -> usize {
        field * self.block_size * self.n_steps + step * self.block_size + i
    }

    /// Permutation mapping time-major positions to the stored field-major
    /// layout: step 0 of all fields first, then step 1, and so on. Returns
    /// `perm` with `perm[new] = old`.
    pub fn time_major_permutation(&self) -> Vec<usize> {
        let mut perm = Vec::with_capacity(self.order());
        for k in 0..self.n_steps {
            for f in 0..self.n_fields {
                for i in 0..self.block_size {
                    perm.push(self.index(f, k, i));
                }
            }
        }
        perm
    }

    /// Residual `max |L s - F|` for a candidate solution.
    pub fn residual_inf(&self, s: &[f64]) -> f64 {
        let ls = self.matrix.matvec(s);
        ls.iter()
            .zip(&self.rhs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Symmetric dilation `H = [[0, L], [Lᵀ, 0]]`; its eigenvalues are plus and
/// minus the singular values of `L`.
pub fn hermitian_dilation(l: &SparseMatrix) -> SparseMatrix {
    let (nr, nc) = (l.n_rows(), l.n_cols());
    let mut triplets = Vec::with_capacity(2 * l.nnz());
    for (r, c, v) in l.entries() {
        triplets.push((r, nc + c, v));
        triplets.push((nr + c, r, v));
    }
    SparseMatrix::from_triplets(nr + nc, nr + nc, triplets).expect("dilation indices in range")
}

/// Append a scaled block to a triplet list at the given offsets.
pub(crate) fn push_block(
    triplets: &mut Vec<(usize, usize, f64)>,
    row_off: usize,
    col_off: usize,
    block: &SparseMatrix,
    scale: f64,
) {
    if scale == 0.0 {
        return;
    }
    for (r, c, v) in block.entries() {
        triplets.push((row_off + r, col_off + c, scale * v));
    }
}

/// Append a scaled identity block.
pub(crate) fn push_identity(
    triplets: &mut Vec<(usize, usize, f64)>,
    row_off: usize,
    col_off: usize,
    n: usize,
    scale: f64,
) {
    if scale == 0.0 {
        return;
    }
    for i in 0..n {
        triplets.push((row_off + i, col_off + i, scale));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_of_scalar() {
        let l = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 2.0)]).unwrap();
        let h = hermitian_dilation(&l);
        let entries: Vec<_> = h.entries().collect();
        assert_eq!(entries, vec![(0, 1, 2.0), (1, 0, 2.0)]);
        assert!(h.symmetric());
    }

    #[test]
    fn dilation_sparsity_is_structural() {
        // max row nonzeros of H = max over rows of L and columns of L
        let l = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, 1.0), (1, 0, -1.0), (1, 1, 1.0)],
        )
        .unwrap();
        let h = hermitian_dilation(&l);
        assert_eq!(h.sparsity(), l.sparsity().max(l.transpose().sparsity()));
    }
}
