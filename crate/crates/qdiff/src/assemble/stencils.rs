//! Difference stencil matrices.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Nonzero budget for the d-dimensional builders.
pub const DEFAULT_NNZ_BUDGET: usize = 1 << 20;

/// 1-d Dirichlet Laplacian stencil: `(N_x-1)` square tridiagonal `(1, -2, 1)`.
/// Its eigenvalues are `-4 sin^2(i pi / (2 N_x))`.
pub fn build_laplacian_1d(n_x: usize) -> Result<SparseMatrix> {
    if n_x < 2 {
        return Err(Error::config(format!("laplacian needs n_x >= 2, got {n_x}")));
    }
    let n = n_x - 1;
    let mut triplets = Vec::with_capacity(3 * n);
    for i in 0..n {
        triplets.push((i, i, -2.0));
        if i + 1 < n {
            triplets.push((i, i + 1, 1.0));
            triplets.push((i + 1, i, 1.0));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// d-dimensional Dirichlet Laplacian as the Kronecker sum of 1-d stencils,
/// built by index arithmetic (identity factors are never materialized).
/// Order `(N_x-1)^d`.
pub fn build_laplacian_dd(n_x: usize, d: usize) -> Result<SparseMatrix> {
    if d < 1 {
        return Err(Error::config(format!("dimension d = {d} must be >= 1")));
    }
    if n_x < 2 {
        return Err(Error::config(format!("laplacian needs n_x >= 2, got {n_x}")));
    }
    let n = n_x - 1;
    let order = n.checked_pow(d as u32).ok_or_else(|| {
        Error::numerical(format!("laplacian order (N_x-1)^d overflows for n_x={n_x}, d={d}"))
    })?;
    let nnz_estimate = order.saturating_mul(2 * d + 1);
    if nnz_estimate > DEFAULT_NNZ_BUDGET {
        return Err(Error::numerical(format!(
            "laplacian nnz ~{nnz_estimate} exceeds the budget {DEFAULT_NNZ_BUDGET}"
        )));
    }

    let mut triplets = Vec::with_capacity(nnz_estimate);
    // Axis 0 is the most significant digit of the flattened index.
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * n;
    }
    for idx in 0..order {
        triplets.push((idx, idx, -2.0 * d as f64));
        let mut rem = idx;
        for k in 0..d {
            let digit = rem / strides[k];
            rem %= strides[k];
            if digit > 0 {
                triplets.push((idx, idx - strides[k], 1.0));
            }
            if digit + 1 < n {
                triplets.push((idx, idx + strides[k], 1.0));
            }
        }
    }
    SparseMatrix::from_triplets(order, order, triplets)
}

/// Antisymmetric central-difference stencil of order `N_x-1`:
/// `+1` on the superdiagonal, `-1` on the subdiagonal.
pub fn antisymmetric_central_1d(n_x: usize) -> Result<SparseMatrix> {
    if n_x < 2 {
        return Err(Error::config(format!("stencil needs n_x >= 2, got {n_x}")));
    }
    let n = n_x - 1;
    let mut triplets = Vec::with_capacity(2 * n);
    for i in 0..n.saturating_sub(1) {
        triplets.push((i, i + 1, 1.0));
        triplets.push((i + 1, i, -1.0));
    }
    SparseMatrix::from_triplets(n, n, triplets)
}

/// `N_x` square shift matrix with ones on the first subdiagonal only; the
/// transport stencil of the upwind scheme under zero inflow.
pub fn lower_shift_1d(n_x: usize) -> Result<SparseMatrix> {
    if n_x < 1 {
        return Err(Error::config("shift matrix needs n_x >= 1".to_string()));
    }
    let mut triplets = Vec::with_capacity(n_x);
    for i in 1..n_x {
        triplets.push((i, i - 1, 1.0));
    }
    SparseMatrix::from_triplets(n_x, n_x, triplets)
}

/// Upwind one-step operator
/// `B = beta * (Kronecker sum of shift stencils) + (1 - d*beta) I`,
/// of order `N_x^d`, built by index arithmetic.
pub fn upwind_step_operator(n_x: usize, d: usize, beta: f64) -> Result<SparseMatrix> {
    if d < 1 || n_x < 1 {
        return Err(Error::config("upwind operator needs d >= 1 and n_x >= 1".to_string()));
    }
    let order = n_x.checked_pow(d as u32).ok_or_else(|| {
        Error::numerical(format!("upwind order N_x^d overflows for n_x={n_x}, d={d}"))
    })?;
    let nnz_estimate = order.saturating_mul(d + 1);
    if nnz_estimate > DEFAULT_NNZ_BUDGET {
        return Err(Error::numerical(format!(
            "upwind operator nnz ~{nnz_estimate} exceeds the budget {DEFAULT_NNZ_BUDGET}"
        )));
    }

    let mut triplets = Vec::with_capacity(nnz_estimate);
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * n_x;
    }
    let diag = 1.0 - d as f64 * beta;
    for idx in 0..order {
        if diag != 0.0 {
            triplets.push((idx, idx, diag));
        }
        let mut rem = idx;
        for k in 0..d {
            let digit = rem / strides[k];
            rem %= strides[k];
            // upstream neighbor along axis k; digit 0 sits next to the
            // zero-inflow boundary and receives nothing
            if digit > 0 {
                triplets.push((idx, idx - strides[k], beta));
            }
        }
    }
    SparseMatrix::from_triplets(order, order, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_1d_pattern() {
        let l = build_laplacian_1d(3).unwrap();
        assert_eq!(l.to_dense(), nalgebra::dmatrix![-2.0, 1.0; 1.0, -2.0]);
        let single = build_laplacian_1d(2).unwrap();
        assert_eq!(single.to_dense(), nalgebra::dmatrix![-2.0]);
        assert!(build_laplacian_1d(1).is_err());
    }

    #[test]
    fn laplacian_1d_eigenvalues() {
        // N_x = 3: char poly (l+2)^2 - 1 = 0 -> {-1, -3} = -4 sin^2(i pi/6)
        let l = build_laplacian_1d(3).unwrap().to_dense();
        let mut eig: Vec<f64> = l.symmetric_eigen().eigenvalues.iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(eig[0], -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], -1.0, epsilon = 1e-12);
        for (i, want) in [(1usize, -1.0f64), (2, -3.0)] {
            let formula = -4.0 * (i as f64 * std::f64::consts::PI / 6.0).sin().powi(2);
            assert_abs_diff_eq!(formula, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_dd_reduces_to_1d() {
        let a = build_laplacian_dd(5, 1).unwrap();
        let b = build_laplacian_1d(5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn laplacian_2d_matches_kronecker_sum_and_eigenvalues() {
        let l2 = build_laplacian_dd(3, 2).unwrap();
        assert_eq!(l2.n_rows(), 4);
        // explicit Kronecker sum against the 1-d factor
        let l1 = build_laplacian_1d(3).unwrap().to_dense();
        let id = nalgebra::DMatrix::<f64>::identity(2, 2);
        let want = l1.kronecker(&id) + id.kronecker(&l1);
        assert_eq!(l2.to_dense(), want);
        // eigenvalues are pair sums of {-1, -3}
        let mut eig: Vec<f64> = l2.to_dense().symmetric_eigen().eigenvalues.iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        let want_eig = [-6.0, -4.0, -4.0, -2.0];
        for (e, w) in eig.iter().zip(want_eig) {
            assert_abs_diff_eq!(*e, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn laplacian_3d_extreme_eigenvalue() {
        // min |eigenvalue| = 3 * 4 sin^2(pi/6) = 3 for N_x = 3, d = 3
        let l3 = build_laplacian_dd(3, 3).unwrap();
        let eig = l3.to_dense().symmetric_eigen().eigenvalues;
        let min_abs = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
        assert_abs_diff_eq!(min_abs, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn laplacian_budget_enforced() {
        assert!(build_laplacian_dd(200, 3).is_err());
    }

    #[test]
    fn antisymmetric_stencil_shape() {
        let m = antisymmetric_central_1d(3).unwrap();
        assert_eq!(m.to_dense(), nalgebra::dmatrix![0.0, 1.0; -1.0, 0.0]);
        assert!(m.antisymmetric());
    }

    #[test]
    fn lower_shift_is_strictly_lower() {
        let t = lower_shift_1d(3).unwrap();
        assert_eq!(
            t.to_dense(),
            nalgebra::dmatrix![0.0, 0.0, 0.0; 1.0, 0.0, 0.0; 0.0, 1.0, 0.0]
        );
        assert!(t.entries().all(|(r, c, _)| c < r));
    }

    #[test]
    fn upwind_operator_unit_cfl_is_pure_shift() {
        let b = upwind_step_operator(4, 1, 1.0).unwrap();
        assert_eq!(b, lower_shift_1d(4).unwrap());
    }

    #[test]
    fn upwind_operator_small_case() {
        let b = upwind_step_operator(2, 1, 0.5).unwrap();
        assert_eq!(b.to_dense(), nalgebra::dmatrix![0.5, 0.0; 0.5, 0.5]);
    }

    #[test]
    fn upwind_row_sums_at_most_one() {
        for d in 1..=3usize {
            let beta = 1.0 / d as f64;
            let b = upwind_step_operator(3, d, beta).unwrap();
            for r in 0..b.n_rows() {
                let sum: f64 = b.row(r).map(|(_, v)| v).sum();
                assert!(sum <= 1.0 + 1e-14, "row {r} sum {sum} for d={d}");
                assert!(b.row(r).all(|(_, v)| v >= 0.0));
            }
        }
    }
}
