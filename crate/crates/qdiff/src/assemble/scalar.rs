//! All-at-once systems for the scalar problems: the decaying ODE, the heat
//! equation, and the first-order hyperbolic equation.

use super::stencils::{build_laplacian_dd, upwind_step_operator};
use super::{push_block, push_identity, SpaceTimeSystem};
use crate::config::{Equation, ProblemConfig, Scheme};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// One-parameter time discretization of `du/dt = -a u`:
/// `s1 = 1 - (1-theta) a tau`, `s2 = 1 + theta a tau`, bidiagonal system
/// with diagonal `s2`, subdiagonal `-s1`, and `F = [s1 u0, 0, ...]`.
pub fn build_ode_theta(a: f64, theta: f64, tau: f64, n_t: usize, u0: f64) -> Result<SpaceTimeSystem> {
    if a <= 0.0 {
        return Err(Error::config(format!("decay constant a = {a} must be positive")));
    }
    if theta < 1.0 && tau >= 1.0 / (a * (1.0 - theta)) {
        return Err(Error::config(format!(
            "time step tau = {tau} violates tau < 1/(a(1-theta)) = {}",
            1.0 / (a * (1.0 - theta))
        )));
    }
    if n_t < 1 {
        return Err(Error::config("n_t must be >= 1".to_string()));
    }
    let s1 = 1.0 - (1.0 - theta) * a * tau;
    let s2 = 1.0 + theta * a * tau;

    let mut triplets = Vec::with_capacity(2 * n_t);
    for k in 0..n_t {
        triplets.push((k, k, s2));
        if k > 0 {
            triplets.push((k, k - 1, -s1));
        }
    }
    let mut rhs = vec![0.0; n_t];
    rhs[0] = s1 * u0;

    SpaceTimeSystem {
        matrix: SparseMatrix::from_triplets(n_t, n_t, triplets)?,
        rhs,
        block_size: 1,
        n_steps: n_t,
        n_fields: 1,
        scheme: Scheme::Theta,
        variable_scaling: None,
    }
    .check()
}

/// Interior grid points in flattening order (axis 0 most significant).
pub fn interior_points(n_x: usize, d: usize, lo: f64, h: f64) -> Vec<Vec<f64>> {
    let n = n_x - 1;
    let order = n.pow(d as u32);
    let mut strides = vec![1usize; d];
    for k in (0..d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * n;
    }
    (0..order)
        .map(|idx| {
            let mut rem = idx;
            (0..d)
                .map(|k| {
                    let digit = rem / strides[k];
                    rem %= strides[k];
                    lo + (digit + 1) as f64 * h
                })
                .collect()
        })
        .collect()
}

/// Heat equation space-time system with homogeneous Dirichlet data.
///
/// Per-step blocks `A = I - theta*beta*L`, `B = I + (1-theta)*beta*L` with
/// `beta = tau/h^2` and `L` the d-dimensional Laplacian stencil; `L` is block
/// bidiagonal with diagonal `A`, subdiagonal `-B`; the first block of `F`
/// carries `B u0`.
pub fn build_heat_system(
    cfg: &ProblemConfig,
    initial: &dyn Fn(&[f64]) -> f64,
) -> Result<SpaceTimeSystem> {
    if cfg.equation != Equation::Heat {
        return Err(Error::config("build_heat_system needs a heat configuration".to_string()));
    }
    cfg.ensure_valid()?;

    let beta = cfg.beta_tilde();
    let lap = build_laplacian_dd(cfg.n_x, cfg.d)?;
    let n = lap.n_rows();
    let a_block = SparseMatrix::identity(n).add_scaled(&lap, -cfg.theta * beta)?;
    let b_block = SparseMatrix::identity(n).add_scaled(&lap, (1.0 - cfg.theta) * beta)?;

    let n_t = cfg.n_t;
    let order = n * n_t;
    let mut triplets = Vec::new();
    for k in 0..n_t {
        push_block(&mut triplets, k * n, k * n, &a_block, 1.0);
        if k > 0 {
            push_block(&mut triplets, k * n, (k - 1) * n, &b_block, -1.0);
        }
    }

    let u0: Vec<f64> = interior_points(cfg.n_x, cfg.d, cfg.domain_lo, cfg.h())
        .iter()
        .map(|p| initial(p))
        .collect();
    let mut rhs = vec![0.0; order];
    rhs[..n].copy_from_slice(&b_block.matvec(&u0));

    SpaceTimeSystem {
        matrix: SparseMatrix::from_triplets(order, order, triplets)?,
        rhs,
        block_size: n,
        n_steps: n_t,
        n_fields: 1,
        scheme: Scheme::Theta,
        variable_scaling: None,
    }
    .check()
}

/// Upwind space-time system for the d-dimensional transport equation with
/// zero inflow: diagonal blocks `I`, subdiagonal `-B` with
/// `B = beta * (Kronecker sum of shifts) + (1 - d*beta) I`.
pub fn build_upwind_hyperbolic(
    cfg: &ProblemConfig,
    initial: &dyn Fn(&[f64]) -> f64,
) -> Result<SpaceTimeSystem> {
    if cfg.equation != Equation::Hyperbolic {
        return Err(Error::config("build_upwind_hyperbolic needs a hyperbolic configuration".to_string()));
    }
    cfg.ensure_valid()?;

    let beta = cfg.beta();
    let b_block = upwind_step_operator(cfg.n_x, cfg.d, beta)?;
    let n = b_block.n_rows();
    let n_t = cfg.n_t;
    let order = n * n_t;

    let mut triplets = Vec::new();
    for k in 0..n_t {
        push_identity(&mut triplets, k * n, k * n, n, 1.0);
        if k > 0 {
            push_block(&mut triplets, k * n, (k - 1) * n, &b_block, -1.0);
        }
    }

    // unknowns sit at nodes j = 1..N_x per axis
    let mut strides = vec![1usize; cfg.d];
    for k in (0..cfg.d.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * cfg.n_x;
    }
    let u0: Vec<f64> = (0..n)
        .map(|idx| {
            let mut rem = idx;
            let point: Vec<f64> = (0..cfg.d)
                .map(|k| {
                    let digit = rem / strides[k];
                    rem %= strides[k];
                    cfg.domain_lo + (digit + 1) as f64 * cfg.h()
                })
                .collect();
            initial(&point)
        })
        .collect();
    let mut rhs = vec![0.0; order];
    rhs[..n].copy_from_slice(&b_block.matvec(&u0));

    SpaceTimeSystem {
        matrix: SparseMatrix::from_triplets(order, order, triplets)?,
        rhs,
        block_size: n,
        n_steps: n_t,
        n_fields: 1,
        scheme: Scheme::Upwind,
        variable_scaling: None,
    }
    .check()
}
