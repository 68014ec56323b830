//! Singular-value and eigenvalue analysis.
//!
//! The dense SVD is the oracle every closed-form bound is checked against;
//! it is deterministic, so reports reproduce bit-for-bit. Above the dense
//! cap, extreme singular values come from power iteration on `L Lᵀ` and
//! inverse power iteration, the latter using exact block forward/backward
//! substitution over the time-step structure.

use crate::assemble::SpaceTimeSystem;
use crate::config::{Equation, ProblemConfig, Scheme};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseMatrix};
use nalgebra::{Complex, DMatrix, Matrix2};
use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

type Complex64 = Complex<f64>;

/// Default order cap for the dense oracle.
pub const DENSE_SVD_CAP: usize = 4096;

/// Default relative tolerance of the iterative path.
pub const ITERATIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralMethod {
    #[serde(rename = "DenseSVD")]
    DenseSvd,
    Iterative,
    BoundsOnly,
}

/// Summary of one matrix's singular spectrum.
///
/// A nonpositive `theorem_lower` is reported as-is; the sign itself flags
/// that the closed-form bound is uninformative for the configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub kappa: f64,
    pub sparsity: usize,
    /// Union of the per-row singular-value intervals, merged and sorted.
    pub gershgorin_intervals: Vec<[f64; 2]>,
    pub theorem_lower: Option<f64>,
    pub theorem_upper: Option<f64>,
    pub method: SpectralMethod,
}

/// Full singular spectrum by dense SVD, descending. Deterministic.
pub fn singular_values_dense(l: &SparseMatrix) -> Result<Vec<f64>> {
    singular_values_dense_capped(l, DENSE_SVD_CAP)
}

pub fn singular_values_dense_capped(l: &SparseMatrix, cap: usize) -> Result<Vec<f64>> {
    let order = l.n_rows().max(l.n_cols());
    if order > cap {
        return Err(Error::numerical(format!(
            "dense SVD capped at order {cap}, got {order}"
        )));
    }
    let svd = l.to_dense().svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Bounds on `|lambda|` for a symmetric matrix from Gershgorin discs.
///
/// Discs of `H` alone degenerate for matrices with zero diagonal (every
/// dilation), so the bound is tightened with the discs of `H^2`, whose
/// square roots also confine `|lambda|`; the result combines both.
pub fn gershgorin_eigen_bounds(h: &SparseMatrix) -> Result<(f64, f64)> {
    if !h.symmetric() {
        return Err(Error::numerical("gershgorin_eigen_bounds needs a symmetric matrix"));
    }
    let radii = h.offdiag_row_sums();
    let diag = h.diagonal();
    let mut lo_direct = f64::INFINITY;
    let mut hi_direct = 0.0f64;
    for (d, r) in diag.iter().zip(&radii) {
        let (a, b) = (d - r, d + r);
        let dist = if a <= 0.0 && 0.0 <= b { 0.0 } else { a.abs().min(b.abs()) };
        lo_direct = lo_direct.min(dist);
        hi_direct = hi_direct.max(d.abs() + r);
    }

    let h2 = h.matmul(h)?;
    let radii2 = h2.offdiag_row_sums();
    let diag2 = h2.diagonal();
    let mut lo_gram = f64::INFINITY;
    let mut hi_gram = 0.0f64;
    for (c, r) in diag2.iter().zip(&radii2) {
        lo_gram = lo_gram.min((c - r).max(0.0));
        hi_gram = hi_gram.max(c + r);
    }
    let (lo_gram, hi_gram) = (lo_gram.sqrt(), hi_gram.sqrt());

    Ok((lo_direct.max(lo_gram), hi_direct.min(hi_gram)))
}

/// Per-row singular-value intervals `[(|a_ii| - s_i)_+, |a_ii| + s_i]` with
/// `s_i = max(r_i, c_i)` over off-diagonal row/column absolute sums.
pub fn gershgorin_singular_bounds(a: &SparseMatrix) -> Result<Vec<[f64; 2]>> {
    if !a.is_square() {
        return Err(Error::numerical("gershgorin_singular_bounds needs a square matrix"));
    }
    let rows = a.offdiag_row_sums();
    let cols = a.offdiag_col_sums();
    let diag = a.diagonal();
    Ok((0..a.n_rows())
        .map(|i| {
            let s = rows[i].max(cols[i]);
            [(diag[i].abs() - s).max(0.0), diag[i].abs() + s]
        })
        .collect())
}

/// Merge intervals into a sorted disjoint union.
pub fn merge_intervals(mut intervals: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    intervals.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut merged: Vec<[f64; 2]> = Vec::new();
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv[0] <= last[1] => last[1] = last[1].max(iv[1]),
            _ => merged.push(iv),
        }
    }
    merged
}

pub fn interval_union_contains(unions: &[[f64; 2]], x: f64, tol: f64) -> bool {
    unions.iter().any(|iv| iv[0] - tol <= x && x <= iv[1] + tol)
}

/// Block forward/backward substitution over the time-step structure of a
/// space-time system. The per-step diagonal block (in time-major order) is
/// factored once and reused while later steps carry identical blocks.
struct StructuredSolver {
    /// original matrix, CSR
    matrix: SparseMatrix,
    /// transposed matrix, CSR
    transposed: SparseMatrix,
    /// perm[new] = old index (time-major ordering)
    perm: Vec<usize>,
    /// inverse permutation: step index of each old index
    step_of: Vec<usize>,
    step_size: usize,
    n_steps: usize,
    diag_identity: bool,
    diag_lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    diag_t_lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl StructuredSolver {
    fn new(system: &SpaceTimeSystem) -> Result<Self> {
        let order = system.order();
        let perm = system.time_major_permutation();
        let mut step_of = vec![0usize; order];
        let mut pos_of = vec![0usize; order];
        let step_size = system.block_size * system.n_fields;
        for (new, &old) in perm.iter().enumerate() {
            step_of[old] = new / step_size;
            pos_of[old] = new % step_size;
        }

        // gather the step-0 diagonal block in time-major coordinates
        let mut diag = DMatrix::<f64>::zeros(step_size, step_size);
        for new_r in 0..step_size {
            let old_r = perm[new_r];
            for (c, v) in system.matrix.row(old_r) {
                if step_of[c] == 0 {
                    diag[(new_r, pos_of[c])] = v;
                }
            }
        }
        // verify every later step carries the same diagonal block
        for k in 1..system.n_steps {
            for new_r in 0..step_size {
                let old_r = perm[k * step_size + new_r];
                for (c, v) in system.matrix.row(old_r) {
                    if step_of[c] == k && (diag[(new_r, pos_of[c])] - v).abs() > 0.0 {
                        return Err(Error::numerical(
                            "structured solver requires identical diagonal blocks across steps",
                        ));
                    }
                }
            }
        }

        let diag_identity = diag == DMatrix::identity(step_size, step_size);
        let (diag_lu, diag_t_lu) = if diag_identity {
            (None, None)
        } else {
            let lu = diag.clone().lu();
            let lu_t = diag.transpose().lu();
            if lu.determinant().abs() == 0.0 {
                return Err(Error::numerical("singular per-step diagonal block"));
            }
            (Some(lu), Some(lu_t))
        };

        Ok(StructuredSolver {
            matrix: system.matrix.clone(),
            transposed: system.matrix.transpose(),
            perm,
            step_of,
            step_size,
            n_steps: system.n_steps,
            diag_identity,
            diag_lu,
            diag_t_lu,
        })
    }

    /// Solve `L x = b` by block forward substitution.
    fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        let mut rhs = vec![0.0; self.step_size];
        for k in 0..self.n_steps {
            for pos in 0..self.step_size {
                let old_r = self.perm[k * self.step_size + pos];
                let mut acc = b[old_r];
                for (c, v) in self.matrix.row(old_r) {
                    if self.step_of[c] < k {
                        acc -= v * x[c];
                    }
                }
                rhs[pos] = acc;
            }
            let sol = self.solve_diag(&rhs, false);
            for pos in 0..self.step_size {
                x[self.perm[k * self.step_size + pos]] = sol[pos];
            }
        }
        x
    }

    /// Solve `Lᵀ x = b` by block backward substitution.
    fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        let mut rhs = vec![0.0; self.step_size];
        for k in (0..self.n_steps).rev() {
            for pos in 0..self.step_size {
                let old_r = self.perm[k * self.step_size + pos];
                let mut acc = b[old_r];
                for (c, v) in self.transposed.row(old_r) {
                    if self.step_of[c] > k {
                        acc -= v * x[c];
                    }
                }
                rhs[pos] = acc;
            }
            let sol = self.solve_diag(&rhs, true);
            for pos in 0..self.step_size {
                x[self.perm[k * self.step_size + pos]] = sol[pos];
            }
        }
        x
    }

    fn solve_diag(&self, rhs: &[f64], transposed: bool) -> Vec<f64> {
        if self.diag_identity {
            return rhs.to_vec();
        }
        let lu = if transposed {
            self.diag_t_lu.as_ref().unwrap()
        } else {
            self.diag_lu.as_ref().unwrap()
        };
        let sol = lu
            .solve(&nalgebra::DVector::from_column_slice(rhs))
            .expect("diagonal block verified nonsingular");
        sol.iter().cloned().collect()
    }
}

fn seeded_unit_vector(n: usize) -> Vec<f64> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nv = norm2(&v);
    for x in &mut v {
        *x /= nv;
    }
    v
}

struct IterationOutcome {
    value: f64,
    vector: Vec<f64>,
    converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator by
/// Krylov-accelerated power iteration: restarted Lanczos with full
/// reorthogonalization, restarting from the best Ritz vector. The residual
/// bound `|beta_m y_m|` controls the eigenvalue error directly for symmetric
/// operators, so convergence at `tol` means `tol`-accurate values.
fn top_eigen_lanczos(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    tol: f64,
    cap: usize,
) -> IterationOutcome {
    let n = start.len();
    let inner = 40.min(n.max(2));
    let mut v0 = start.to_vec();
    let nv = norm2(&v0);
    for x in &mut v0 {
        *x /= nv;
    }
    let mut value = 0.0f64;
    let mut applications = 0usize;

    while applications < cap {
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut breakdown = false;

        for j in 0..inner {
            if applications >= cap {
                break;
            }
            let mut w = apply(&basis[j]);
            applications += 1;
            let alpha = dot(&basis[j], &w);
            alphas.push(alpha);
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let beta = norm2(&w);
            if beta < 1e-14 * alpha.abs().max(1.0) {
                breakdown = true;
                break;
            }
            if j + 1 < inner {
                betas.push(beta);
                for x in &mut w {
                    *x /= beta;
                }
                basis.push(w);
            } else {
                betas.push(beta);
            }
        }

        // Ritz extraction from the tridiagonal
        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            t[(j, j)] = alphas[j];
            if j + 1 < m {
                t[(j, j + 1)] = betas[j];
                t[(j + 1, j)] = betas[j];
            }
        }
        let eig = t.symmetric_eigen();
        let mut top = 0usize;
        for j in 1..m {
            if eig.eigenvalues[j] > eig.eigenvalues[top] {
                top = j;
            }
        }
        value = eig.eigenvalues[top];
        let y = eig.eigenvectors.column(top);
        let mut ritz = vec![0.0; n];
        for (j, b) in basis.iter().enumerate() {
            for (r, bi) in ritz.iter_mut().zip(b) {
                *r += y[j] * bi;
            }
        }
        let rn = norm2(&ritz);
        for x in &mut ritz {
            *x /= rn;
        }
        let residual = betas.last().map_or(0.0, |b| (b * y[m - 1]).abs());
        if breakdown || residual <= tol * value.abs().max(f64::MIN_POSITIVE) {
            return IterationOutcome { value, vector: ritz, converged: true };
        }
        v0 = ritz;
    }
    IterationOutcome { value, vector: v0, converged: false }
}

fn power_iterate(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    start: Vec<f64>,
    tol: f64,
    cap: usize,
) -> IterationOutcome {
    top_eigen_lanczos(apply, &start, tol, cap)
}

/// Extreme singular values of a space-time system: `sigma_max` by power
/// iteration on `L Lᵀ`, `sigma_min` by inverse power iteration with exact
/// block substitution. Starts from the all-ones vector and restarts once
/// from a fixed seeded vector on stagnation.
pub fn extreme_singular_values(system: &SpaceTimeSystem, tol: f64) -> Result<(f64, f64)> {
    let order = system.order();
    let cap = 10 * order;
    let l = &system.matrix;

    let forward = |v: &[f64]| l.matvec_transpose(&l.matvec(v));
    let ones = vec![1.0 / (order as f64).sqrt(); order];
    let mut top = power_iterate(&forward, ones.clone(), tol, cap);
    if !top.converged {
        let retry = power_iterate(&forward, seeded_unit_vector(order), tol, cap);
        if retry.converged || retry.value > top.value {
            top = retry;
        }
    }
    if !top.converged {
        return Err(Error::numerical(format!(
            "power iteration did not converge within {cap} operator applications"
        )));
    }
    let sigma_max = top.value.max(0.0).sqrt();

    let solver = StructuredSolver::new(system)?;
    let inverse = |v: &[f64]| solver.solve_lower(&solver.solve_upper(v));
    let mut bottom = power_iterate(&inverse, ones, tol, cap);
    if !bottom.converged {
        let retry = power_iterate(&inverse, seeded_unit_vector(order), tol, cap);
        if retry.converged || retry.value > bottom.value {
            bottom = retry;
        }
    }
    if !bottom.converged {
        return Err(Error::numerical(format!(
            "inverse iteration did not converge within {cap} operator applications; system is near-singular"
        )));
    }
    if bottom.value <= 0.0 {
        return Err(Error::numerical("inverse iteration produced a nonpositive estimate"));
    }
    let sigma_min = 1.0 / bottom.value.sqrt();
    Ok((sigma_min, sigma_max))
}

/// Closed-form singular-value bounds `(sigma_lower, sigma_upper)` for the
/// schemes with a proven pair. The lower bound may be nonpositive; it is
/// returned as-is.
pub fn theorem_bounds(cfg: &ProblemConfig) -> Result<(f64, f64)> {
    let tau = cfg.tau();
    let h = cfg.h();
    let d = cfg.d as f64;
    let eps = cfg.epsilon;
    match (cfg.equation, cfg.scheme) {
        (Equation::Ode, Scheme::Theta) => {
            if cfg.theta < 1.0 && tau >= 1.0 / (cfg.a * (1.0 - cfg.theta)) {
                return Err(Error::config("theorem needs tau < 1/(a(1-theta))".to_string()));
            }
            let at = cfg.a * tau;
            Ok((at, 2.0 + (2.0 * cfg.theta - 1.0).abs() * at))
        }
        (Equation::Heat, Scheme::Theta) => {
            let bt = cfg.beta_tilde();
            if tau > 1.0 / (8.0 * d) + 1e-14 {
                return Err(Error::config("theorem needs tau <= 1/(8d)".to_string()));
            }
            if cfg.theta == 0.0 {
                if bt > 1.0 / (4.0 * d) + 1e-14 {
                    return Err(Error::config("theorem needs tau/h^2 <= 1/(4d)".to_string()));
                }
                Ok((8.0 * d * tau, 3.0))
            } else if cfg.theta == 0.5 {
                Ok((8.0 * d * tau, (4.0 * d * bt).max(2.0)))
            } else {
                Err(Error::config("heat bounds cover theta in {0, 1/2}".to_string()))
            }
        }
        (Equation::Hyperbolic, Scheme::Upwind) => {
            if cfg.beta() > 1.0 / d + 1e-14 {
                return Err(Error::config("theorem needs beta <= 1/d".to_string()));
            }
            Ok((1.0 / cfg.n_t as f64, 2.0))
        }
        (Equation::Telegraph, Scheme::PreconditionedImex) => {
            let beta = cfg.beta();
            if beta > 0.5 + 1e-14 || tau > 1.0 || h > 1.0 {
                return Err(Error::config("theorem needs beta = iota*h <= 1/2 and tau, h <= 1".to_string()));
            }
            let lower = h * h / 8.0 - (3.0 * beta + 2.0 - tau) * eps / (1.0 + eps);
            Ok((lower, 2.0 + beta))
        }
        (Equation::Telegraph, Scheme::RelaxationRescaled) => {
            let beta = cfg.beta();
            if beta > 1.0 + 1e-14 || cfg.beta_tilde() > 4.0 + 1e-14 || tau > 1.0 || h > 1.0 {
                return Err(Error::config("theorem needs beta <= 1, tau/h^2 <= 4, tau, h <= 1".to_string()));
            }
            let alpha = eps / (tau + eps)
                * ((1.0 + tau) * beta * beta / (2.0 * tau)
                    + beta / tau
                    + (1.0 + tau) * (beta - beta * beta / 2.0)
                    + tau);
            Ok((tau / 4.0 - alpha, 5.0 + alpha))
        }
        (Equation::Telegraph, Scheme::Penalized) => {
            let beta = cfg.beta();
            if beta > 0.5 + 1e-14 {
                return Err(Error::config("theorem needs beta <= 1/2".to_string()));
            }
            let alpha = eps / (tau + eps) * (2.0 + 4.0 * tau) / tau;
            Ok((tau / 3.0 - alpha, 4.0 + 2.0 * alpha))
        }
        _ => Err(Error::config(format!(
            "no closed-form singular-value bounds for {} / {}",
            cfg.equation.label(),
            cfg.scheme.label()
        ))),
    }
}

/// Sharp lower bound `sigma_L = 1 - sqrt((1-tau)^2 + beta^2)` for the
/// preconditioned IMEX matrix in the `eps -> 0` regime with `tau = iota h^2`,
/// `beta = iota h`.
pub fn imex_sharp_sigma_lower(tau: f64, beta: f64) -> f64 {
    1.0 - ((1.0 - tau).powi(2) + beta * beta).sqrt()
}

/// One-step Fourier symbol at frequency `k` for the schemes analyzed in
/// frequency space. Entries follow the displayed coefficient formulas; the
/// `eps`-dependent factors are evaluated through their stable combinations.
pub fn fourier_symbol(cfg: &ProblemConfig, k: f64) -> Result<Matrix2<Complex64>> {
    let tau = cfg.tau();
    let h = cfg.h();
    let eps = cfg.epsilon;
    let beta = tau / h;
    let beta_tilde = tau / (h * h);
    let s2 = (k * h / 2.0).sin().powi(2);
    let skh = (k * h).sin();
    match cfg.scheme {
        Scheme::Penalized => {
            let inv_gamma = eps / (eps + tau);
            let nu_over_gamma = (1.0 - eps) / (eps + tau);
            let denom = 1.0 + 4.0 * beta_tilde * s2;
            let c1 = (-1.0 - 4.0 * beta_tilde * s2
                + (2.0 * beta + beta * beta * nu_over_gamma) * skh * skh)
                / denom;
            let c2 = Complex64::new(0.0, beta * inv_gamma * skh);
            let d1 = Complex64::new(2.0 * beta * inv_gamma * s2, 0.0);
            let d2 = Complex64::new(
                0.0,
                (beta - 2.0 * beta * beta * nu_over_gamma * skh * skh) * skh / denom,
            );
            Ok(Matrix2::new(Complex64::new(c1, 0.0), c2, d2, d1))
        }
        Scheme::ExplicitMultiscale => {
            if eps <= 0.0 {
                return Err(Error::config("explicit symbol needs eps > 0".to_string()));
            }
            let sqrt_eps = eps.sqrt();
            let c1 = 1.0 - 2.0 * beta / sqrt_eps * s2;
            let d1 = c1 - tau / eps;
            let off = Complex64::new(0.0, -beta * skh / sqrt_eps);
            Ok(Matrix2::new(Complex64::new(c1, 0.0), off, off, Complex64::new(d1, 0.0)))
        }
        _ => Err(Error::config(format!(
            "no Fourier symbol for scheme {}",
            cfg.scheme.label()
        ))),
    }
}

/// Rescaled explicit-scheme symbol in the `(a, c_p, delta)` parameterization
/// with `a = |sin(kh/2)|`.
pub fn explicit_symbol(a: f64, c_p: f64, delta: f64) -> Matrix2<Complex64> {
    let c1 = 1.0 - 2.0 * c_p * a * a;
    let off = 2.0 * c_p * a * (1.0 - a * a).max(0.0).sqrt();
    Matrix2::new(
        Complex64::new(c1, 0.0),
        Complex64::new(0.0, off),
        Complex64::new(0.0, off),
        Complex64::new(c1 - c_p * delta, 0.0),
    )
}

/// Spectral norm of a 2x2 complex matrix.
pub fn matrix2_norm(m: &Matrix2<Complex64>) -> f64 {
    let g = m.adjoint() * m;
    // eigenvalues of the 2x2 Hermitian Gram matrix
    let a = g[(0, 0)].re;
    let d = g[(1, 1)].re;
    let b = g[(0, 1)].norm_sqr();
    let tr = a + d;
    let det = a * d - b;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    (tr / 2.0 + disc).max(0.0).sqrt()
}

/// Analyze a system: singular extremes by the dense oracle up to
/// `dense_cap`, otherwise by the iterative path; Gershgorin union; optional
/// theorem bounds from the config.
pub fn analyze_system(
    system: &SpaceTimeSystem,
    cfg: Option<&ProblemConfig>,
    dense_cap: usize,
    iter_tol: f64,
) -> Result<SpectralReport> {
    let l = &system.matrix;
    let (sigma_min, sigma_max, method) = if system.order() <= dense_cap {
        let sv = singular_values_dense_capped(l, dense_cap)?;
        let max = sv[0];
        let min = *sv.last().unwrap();
        (min, max, SpectralMethod::DenseSvd)
    } else {
        let (min, max) = extreme_singular_values(system, iter_tol)?;
        (min, max, SpectralMethod::Iterative)
    };
    if sigma_min <= 0.0 {
        return Err(Error::numerical("matrix is singular to working precision"));
    }
    let bounds = cfg.and_then(|c| theorem_bounds(c).ok());
    Ok(SpectralReport {
        sigma_min,
        sigma_max,
        kappa: sigma_max / sigma_min,
        sparsity: l.sparsity(),
        gershgorin_intervals: merge_intervals(gershgorin_singular_bounds(l)?),
        theorem_lower: bounds.map(|b| b.0),
        theorem_upper: bounds.map(|b| b.1),
        method,
    })
}

/// Deterministic random sparse square matrix for containment audits.
pub fn random_sparse_square(rng: &mut impl Rng, max_order: usize) -> SparseMatrix {
    let n = rng.random_range(2..=max_order);
    let mut triplets = Vec::new();
    for r in 0..n {
        triplets.push((r, r, rng.random_range(-3.0..3.0)));
        for _ in 0..rng.random_range(0..3usize) {
            let c = rng.random_range(0..n);
            triplets.push((r, c, rng.random_range(-2.0..2.0)));
        }
    }
    SparseMatrix::from_triplets(n, n, triplets).expect("indices in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::{build_ode_theta, hermitian_dilation};
    use approx::assert_abs_diff_eq;

    #[test]
    fn dense_svd_diagonal() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 3.0)]).unwrap();
        let sv = singular_values_dense(&m).unwrap();
        assert_abs_diff_eq!(sv[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sv[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_svd_golden_ratio_bidiagonal() {
        // singular values of [[1,0],[-1,1]] are (sqrt(5) +/- 1)/2
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let sv = singular_values_dense(&m).unwrap();
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(sv[0], phi, epsilon = 1e-12);
        assert_abs_diff_eq!(sv[1], phi - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dilation_eigenvalues_are_signed_singular_values() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        let sv = singular_values_dense(&m).unwrap();
        let h = hermitian_dilation(&m);
        let eig = h.to_dense().symmetric_eigen().eigenvalues;
        let mut eig: Vec<f64> = eig.iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        let want = [-sv[0], -sv[1], sv[1], sv[0]];
        for (e, w) in eig.iter().zip(want) {
            assert_abs_diff_eq!(*e, w, epsilon = 1e-9);
        }
    }

    #[test]
    fn eigen_bounds_offdiagonal_pair() {
        let h = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        let (lo, hi) = gershgorin_eigen_bounds(&h).unwrap();
        assert_abs_diff_eq!(lo, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_bounds_diagonal_matrix_exact() {
        let h = SparseMatrix::from_triplets(2, 2, vec![(0, 0, -1.0), (1, 1, 4.0)]).unwrap();
        let (lo, hi) = gershgorin_eigen_bounds(&h).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn eigen_bounds_witness_ode_theorem() {
        // a = 1, theta = 0, tau = 0.1: |lambda|min >= a*tau, max <= 2 + a*tau
        let sys = build_ode_theta(1.0, 0.0, 0.1, 4, 1.0).unwrap();
        let h = hermitian_dilation(&sys.matrix);
        let (lo, hi) = gershgorin_eigen_bounds(&h).unwrap();
        assert!(lo >= 0.1 - 1e-12, "lo = {lo}");
        assert!(hi <= 2.1 + 1e-12, "hi = {hi}");
        let sv = singular_values_dense(&sys.matrix).unwrap();
        assert!(lo <= *sv.last().unwrap() && sv[0] <= hi);
    }

    #[test]
    fn eigen_bounds_reject_nonsymmetric() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        assert!(gershgorin_eigen_bounds(&m).is_err());
    }

    #[test]
    fn singular_bounds_triangular_example() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)])
            .unwrap();
        let iv = gershgorin_singular_bounds(&m).unwrap();
        assert_eq!(iv, vec![[1.0, 3.0], [2.0, 4.0]]);
        let sv = singular_values_dense(&m).unwrap();
        let union = merge_intervals(iv);
        for s in sv {
            assert!(interval_union_contains(&union, s, 1e-12), "{s} outside union");
        }
    }

    #[test]
    fn singular_bounds_identity() {
        let iv = gershgorin_singular_bounds(&SparseMatrix::identity(3)).unwrap();
        assert!(iv.iter().all(|&x| x == [1.0, 1.0]));
    }

    #[test]
    fn containment_over_random_matrices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let m = random_sparse_square(&mut rng, 32);
            let union = merge_intervals(gershgorin_singular_bounds(&m).unwrap());
            for s in singular_values_dense(&m).unwrap() {
                assert!(
                    interval_union_contains(&union, s, 1e-9),
                    "sigma {s} escapes union {union:?}"
                );
            }
        }
    }

    #[test]
    fn extremes_match_dense_on_ode() {
        let sys = build_ode_theta(1.0, 0.5, 0.1, 64, 1.0).unwrap();
        let sv = singular_values_dense(&sys.matrix).unwrap();
        let (min, max) = extreme_singular_values(&sys, 1e-10).unwrap();
        assert_abs_diff_eq!(max, sv[0], epsilon = 1e-8 * sv[0]);
        assert_abs_diff_eq!(min, *sv.last().unwrap(), epsilon = 1e-8 * sv[0]);
    }

    #[test]
    fn sharp_sigma_lower_values() {
        let s = imex_sharp_sigma_lower(0.01, 0.1);
        assert_abs_diff_eq!(s, 1.0 - 0.9901f64.sqrt(), epsilon = 1e-15);
        assert!(s > 0.0049 && s < 0.0050);
        assert_abs_diff_eq!(imex_sharp_sigma_lower(0.0, 0.0), 0.0);
        // h = 0.05, iota = 1: sigma_L / h^2 close to 1/2
        let s = imex_sharp_sigma_lower(0.0025, 0.05);
        let ratio = s / 0.0025;
        assert!(ratio > 0.49 && ratio < 0.5, "ratio = {ratio}");
        // always at least h^2/8 in the admissible range
        for h in [0.05, 0.075, 0.1] {
            let s = imex_sharp_sigma_lower(h * h, h);
            assert!(s >= h * h / 8.0);
        }
    }

    #[test]
    fn theorem_bounds_examples() {
        // preconditioned IMEX at eps = 0: (h^2/8, 2 + beta)
        let mut cfg = ProblemConfig::with_steps(
            Equation::Telegraph,
            Scheme::PreconditionedImex,
            0.1,
            0.01,
            10,
        );
        cfg.epsilon = 0.0;
        let (lo, hi) = theorem_bounds(&cfg).unwrap();
        assert_abs_diff_eq!(lo, 0.00125, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 2.1, epsilon = 1e-12);

        // penalized at eps = 0: (tau/3, 4)
        let mut cfg =
            ProblemConfig::with_steps(Equation::Telegraph, Scheme::Penalized, 0.25, 0.1, 4);
        cfg.epsilon = 0.0;
        let (lo, hi) = theorem_bounds(&cfg).unwrap();
        assert_abs_diff_eq!(lo, 0.1 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 4.0, epsilon = 1e-12);

        // diffusive relaxation with tiny eps: lower close to tau/4
        let mut cfg = ProblemConfig::with_steps(
            Equation::Telegraph,
            Scheme::RelaxationRescaled,
            0.2,
            0.05,
            8,
        );
        cfg.epsilon = 1e-8;
        let (lo, _) = theorem_bounds(&cfg).unwrap();
        let beta: f64 = 0.25;
        let alpha = 1e-8 / (0.05 + 1e-8)
            * (1.05 * beta * beta / 0.1 + beta / 0.05 + 1.05 * (beta - beta * beta / 2.0) + 0.05);
        assert_abs_diff_eq!(lo, 0.0125 - alpha, epsilon = 1e-12);
        assert!(alpha < 1e-5);
    }

    #[test]
    fn explicit_symbol_reference_points() {
        let m = explicit_symbol(0.0, 0.3, 0.5);
        assert_abs_diff_eq!(m[(0, 0)].re, 1.0);
        assert_abs_diff_eq!(m[(1, 1)].re, 1.0 - 0.15);
        assert_abs_diff_eq!(m[(0, 1)].norm(), 0.0);

        let m = explicit_symbol(1.0, 0.2, 0.5);
        assert_abs_diff_eq!(m[(0, 0)].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(matrix2_norm(&m), 0.6, epsilon = 1e-12);
    }

    #[test]
    fn penalized_symbol_limit_points() {
        // eps -> 0 and sin(kh) = 0: off-diagonals vanish and |c1| <= 1
        let mut cfg = ProblemConfig::with_steps(Equation::Telegraph, Scheme::Penalized, 0.1, 0.05, 4);
        cfg.epsilon = 0.0;
        let h = cfg.h();
        for k in [0.0, std::f64::consts::PI / h, 2.0 * std::f64::consts::PI / h] {
            let m = fourier_symbol(&cfg, k).unwrap();
            assert_abs_diff_eq!(m[(0, 1)].norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m[(1, 0)].norm(), 0.0, epsilon = 1e-12);
            assert!(m[(0, 0)].norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn merged_intervals_are_disjoint_sorted() {
        let merged = merge_intervals(vec![[3.0, 4.0], [1.0, 2.0], [1.5, 2.5]]);
        assert_eq!(merged, vec![[1.0, 2.5], [3.0, 4.0]]);
    }
}
