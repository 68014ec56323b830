//! All-at-once systems for the two-field relaxation (telegraph) system.
//!
//! Unknowns are laid out as `S = [U; V]` with `U = [u^1; ...; u^{N_t}]`.
//! Every builder draws boundary traces and initial data from the
//! manufactured solution, which is exact for this system.

use super::stencils::{antisymmetric_central_1d, build_laplacian_1d};
use super::{push_block, push_identity, SpaceTimeSystem, VariableScaling};
use crate::config::{Equation, ProblemConfig, Scheme};
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedTelegraph;
use crate::sparse::SparseMatrix;

/// Scheme parameters in forms that stay finite as `eps -> 0`.
///
/// `gamma = 1 + tau/eps` and `nu = (1-eps)/eps` blow up at `eps = 0`; the
/// combinations stored here are the ones the schemes actually need.
#[derive(Debug, Clone, Copy)]
pub struct ApParameters {
    pub tau: f64,
    pub h: f64,
    pub beta: f64,
    pub beta_tilde: f64,
    pub epsilon: f64,
    /// `1/gamma = eps/(eps+tau)`
    pub inv_gamma: f64,
    /// `nu/gamma = (1-eps)/(eps+tau)`
    pub nu_over_gamma: f64,
    /// `rho = eps/(1+eps)` (the preconditioner parameter)
    pub rho: f64,
    /// `rho*nu = (1-eps)/(1+eps)`
    pub rho_nu: f64,
    /// `rho*gamma = (tau+eps)/(1+eps)`
    pub rho_gamma: f64,
}

impl ApParameters {
    pub fn new(tau: f64, h: f64, epsilon: f64) -> Self {
        let eps = epsilon;
        ApParameters {
            tau,
            h,
            beta: tau / h,
            beta_tilde: tau / (h * h),
            epsilon: eps,
            inv_gamma: eps / (eps + tau),
            nu_over_gamma: (1.0 - eps) / (eps + tau),
            rho: eps / (1.0 + eps),
            rho_nu: (1.0 - eps) / (1.0 + eps),
            rho_gamma: (tau + eps) / (1.0 + eps),
        }
    }

    pub fn from_config(cfg: &ProblemConfig) -> Self {
        ApParameters::new(cfg.tau(), cfg.h(), cfg.epsilon)
    }

    /// `gamma = 1 + tau/eps`; infinite at `eps = 0`.
    pub fn gamma(&self) -> f64 {
        1.0 + self.tau / self.epsilon
    }

    /// `nu = (1-eps)/eps`; infinite at `eps = 0`.
    pub fn nu(&self) -> f64 {
        (1.0 - self.epsilon) / self.epsilon
    }
}

/// Grid data for the telegraph builders: stencil operators, boundary traces,
/// and initial interior values of the manufactured solution.
pub struct TelegraphData {
    pub n: usize,
    pub n_t: usize,
    pub params: ApParameters,
    /// `A = (beta/2) M_h`
    pub a_op: SparseMatrix,
    /// `B = I + (beta/2) L_h`
    pub b_op: SparseMatrix,
    ms: ManufacturedTelegraph,
    x_lo: f64,
    x_hi: f64,
    tau: f64,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
}

/// Boundary trace kinds following the displayed sign patterns: `b` and `c`
/// carry `(+lo, ..., +hi)` of `u` resp. `v`; the tilde variants carry
/// `(-lo, ..., +hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trace {
    B,
    BTilde,
    C,
    CTilde,
}

impl TelegraphData {
    pub fn new(cfg: &ProblemConfig) -> Result<Self> {
        if cfg.equation != Equation::Telegraph {
            return Err(Error::config("telegraph builder needs a telegraph configuration".to_string()));
        }
        let params = ApParameters::from_config(cfg);
        let n = cfg.interior();
        if n < 1 {
            return Err(Error::config("telegraph grid needs n_x >= 2".to_string()));
        }
        let m_h = antisymmetric_central_1d(cfg.n_x)?;
        let l_h = build_laplacian_1d(cfg.n_x)?;
        let a_op = m_h.scaled(params.beta / 2.0);
        let b_op = SparseMatrix::identity(n).add_scaled(&l_h, params.beta / 2.0)?;

        let ms = ManufacturedTelegraph::new(cfg.epsilon);
        let h = cfg.h();
        let u0 = (1..cfg.n_x).map(|j| ms.u(cfg.domain_lo + j as f64 * h, 0.0)).collect();
        let v0 = (1..cfg.n_x).map(|j| ms.v(cfg.domain_lo + j as f64 * h, 0.0)).collect();

        Ok(TelegraphData {
            n,
            n_t: cfg.n_t,
            params,
            a_op,
            b_op,
            ms,
            x_lo: cfg.domain_lo,
            x_hi: cfg.domain_lo + cfg.n_x as f64 * h,
            tau: cfg.tau(),
            u0,
            v0,
        })
    }

    /// Boundary trace vector at time level `level` (length `n`; for `n = 1`
    /// both boundary contributions land in the single slot).
    pub fn trace(&self, kind: Trace, level: usize) -> Vec<f64> {
        let t = level as f64 * self.tau;
        let (lo_val, hi_val) = match kind {
            Trace::B => (self.ms.u(self.x_lo, t), self.ms.u(self.x_hi, t)),
            Trace::BTilde => (-self.ms.u(self.x_lo, t), self.ms.u(self.x_hi, t)),
            Trace::C => (self.ms.v(self.x_lo, t), self.ms.v(self.x_hi, t)),
            Trace::CTilde => (-self.ms.v(self.x_lo, t), self.ms.v(self.x_hi, t)),
        };
        let mut v = vec![0.0; self.n];
        v[0] += lo_val;
        v[self.n - 1] += hi_val;
        v
    }

    /// Exact interior solution at time level `level`, stacked `(u, v)`.
    pub fn exact_level(&self, level: usize) -> (Vec<f64>, Vec<f64>) {
        let t = level as f64 * self.tau;
        let h = (self.x_hi - self.x_lo) / (self.n as f64 + 1.0);
        let u = (1..=self.n).map(|j| self.ms.u(self.x_lo + j as f64 * h, t)).collect();
        let v = (1..=self.n).map(|j| self.ms.v(self.x_lo + j as f64 * h, t)).collect();
        (u, v)
    }
}

fn axpy(dst: &mut [f64], src: &[f64], factor: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += factor * s;
    }
}

fn two_field_system(
    data: &TelegraphData,
    scheme: Scheme,
    triplets: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    variable_scaling: Option<VariableScaling>,
) -> Result<SpaceTimeSystem> {
    let order = 2 * data.n * data.n_t;
    SpaceTimeSystem {
        matrix: SparseMatrix::from_triplets(order, order, triplets)?,
        rhs,
        block_size: data.n,
        n_steps: data.n_t,
        n_fields: 2,
        scheme,
        variable_scaling,
    }
    .check()
}

/// IMEX scheme, unpreconditioned. Requires `eps > 0`.
///
/// Step form: `-B u^n + u^{n+1} + A v^n = f^{n+1}`,
/// `-B v^n + gamma v^{n+1} + A u^n + nu A u^{n+1} = g^{n+1}`.
pub fn build_imex_system(cfg: &ProblemConfig) -> Result<SpaceTimeSystem> {
    if cfg.scheme != Scheme::Imex {
        return Err(Error::config("build_imex_system needs scheme = imex".to_string()));
    }
    cfg.ensure_valid()?;
    let data = TelegraphData::new(cfg)?;
    let p = data.params;
    let (n, n_t) = (data.n, data.n_t);
    let m = n * n_t;
    let (gamma, nu) = (p.gamma(), p.nu());

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; 2 * m];
    for k in 0..n_t {
        let (ur, vr) = (k * n, m + k * n);
        push_identity(&mut triplets, ur, ur, n, 1.0);
        push_block(&mut triplets, vr, ur, &data.a_op, nu);
        push_identity(&mut triplets, vr, vr, n, gamma);
        if k > 0 {
            push_block(&mut triplets, ur, ur - n, &data.b_op, -1.0);
            push_block(&mut triplets, ur, vr - n, &data.a_op, 1.0);
            push_block(&mut triplets, vr, ur - n, &data.a_op, 1.0);
            push_block(&mut triplets, vr, vr - n, &data.b_op, -1.0);
        }

        // f^{k+1} = (beta/2)(b^k - c~^k)
        let mut f = data.trace(Trace::B, k);
        axpy(&mut f, &data.trace(Trace::CTilde, k), -1.0);
        axpy(&mut rhs[ur..ur + n], &f, p.beta / 2.0);

        // g^{k+1} = (beta/2)(c^k - b~^k - nu b~^{k+1})
        let mut g = data.trace(Trace::C, k);
        axpy(&mut g, &data.trace(Trace::BTilde, k), -1.0);
        axpy(&mut g, &data.trace(Trace::BTilde, k + 1), -nu);
        axpy(&mut rhs[vr..vr + n], &g, p.beta / 2.0);
    }
    // initial-data terms in the first blocks
    axpy(&mut rhs[0..n], &data.b_op.matvec(&data.u0), 1.0);
    axpy(&mut rhs[0..n], &data.a_op.matvec(&data.v0), -1.0);
    axpy(&mut rhs[m..m + n], &data.a_op.matvec(&data.u0), -1.0);
    axpy(&mut rhs[m..m + n], &data.b_op.matvec(&data.v0), 1.0);

    two_field_system(&data, Scheme::Imex, triplets, rhs, None)
}

/// Left-preconditioner `P = diag(I, rho I)` with `rho = eps/(1+eps)` applied
/// to an assembled IMEX system: returns `(P L, P F)`. Scaled parameters are
/// `rho`, `rho*nu`, `rho*gamma`, all bounded as `eps -> 0`.
pub fn apply_imex_preconditioner(system: &SpaceTimeSystem, epsilon: f64) -> Result<SpaceTimeSystem> {
    if system.scheme != Scheme::Imex || system.n_fields != 2 {
        return Err(Error::config(
            "preconditioner applies to systems built by build_imex_system".to_string(),
        ));
    }
    let rho = epsilon / (1.0 + epsilon);
    let m = system.block_size * system.n_steps;
    let mut factors = vec![1.0; 2 * m];
    for f in factors[m..].iter_mut() {
        *f = rho;
    }
    let matrix = system.matrix.row_scaled(&factors)?;
    let mut rhs = system.rhs.clone();
    for r in rhs[m..].iter_mut() {
        *r *= rho;
    }
    SpaceTimeSystem {
        matrix,
        rhs,
        scheme: Scheme::PreconditionedImex,
        ..system.clone()
    }
    .check()
}

/// Preconditioned IMEX system assembled directly from the stable parameter
/// combinations; valid for all `eps >= 0` and equal to
/// `apply_imex_preconditioner(build_imex_system(cfg))` when `eps > 0`.
pub fn build_preconditioned_imex_system(cfg: &ProblemConfig) -> Result<SpaceTimeSystem> {
    if cfg.scheme != Scheme::PreconditionedImex {
        return Err(Error::config(
            "build_preconditioned_imex_system needs scheme = preconditioned_imex".to_string(),
        ));
    }
    cfg.ensure_valid()?;
    let data = TelegraphData::new(cfg)?;
    let p = data.params;
    let (n, n_t) = (data.n, data.n_t);
    let m = n * n_t;

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; 2 * m];
    for k in 0..n_t {
        let (ur, vr) = (k * n, m + k * n);
        push_identity(&mut triplets, ur, ur, n, 1.0);
        push_block(&mut triplets, vr, ur, &data.a_op, p.rho_nu);
        push_identity(&mut triplets, vr, vr, n, p.rho_gamma);
        if k > 0 {
            push_block(&mut triplets, ur, ur - n, &data.b_op, -1.0);
            push_block(&mut triplets, ur, vr - n, &data.a_op, 1.0);
            push_block(&mut triplets, vr, ur - n, &data.a_op, p.rho);
            push_block(&mut triplets, vr, vr - n, &data.b_op, -p.rho);
        }

        let mut f = data.trace(Trace::B, k);
        axpy(&mut f, &data.trace(Trace::CTilde, k), -1.0);
        axpy(&mut rhs[ur..ur + n], &f, p.beta / 2.0);

        // rho*g^{k+1} = (beta/2)(rho(c^k - b~^k) - rho*nu b~^{k+1})
        let mut g = data.trace(Trace::C, k);
        axpy(&mut g, &data.trace(Trace::BTilde, k), -1.0);
        let mut g_scaled: Vec<f64> = g.iter().map(|x| p.rho * x).collect();
        axpy(&mut g_scaled, &data.trace(Trace::BTilde, k + 1), -p.rho_nu);
        axpy(&mut rhs[vr..vr + n], &g_scaled, p.beta / 2.0);
    }
    axpy(&mut rhs[0..n], &data.b_op.matvec(&data.u0), 1.0);
    axpy(&mut rhs[0..n], &data.a_op.matvec(&data.v0), -1.0);
    axpy(&mut rhs[m..m + n], &data.a_op.matvec(&data.u0), -p.rho);
    axpy(&mut rhs[m..m + n], &data.b_op.matvec(&data.v0), p.rho);

    two_field_system(&data, Scheme::PreconditionedImex, triplets, rhs, None)
}

/// Blocks shared by the relaxation-type builders.
struct RelaxationBlocks {
    a1: SparseMatrix,
    a2: SparseMatrix,
    b1: SparseMatrix,
    b2: SparseMatrix,
}

fn relaxation_blocks(data: &TelegraphData) -> Result<RelaxationBlocks> {
    let p = data.params;
    let a_sq = data.a_op.matmul(&data.a_op)?;
    let ba = data.b_op.matmul(&data.a_op)?;
    Ok(RelaxationBlocks {
        a1: data.a_op.scaled(p.inv_gamma),
        a2: data.b_op.scaled(p.inv_gamma),
        b1: data.b_op.add_scaled(&a_sq, p.nu_over_gamma)?,
        b2: data.a_op.add_scaled(&ba, p.nu_over_gamma)?,
    })
}

fn relaxation_rhs(data: &TelegraphData, blocks: &RelaxationBlocks, penalized: bool) -> Vec<f64> {
    let p = data.params;
    let (n, n_t) = (data.n, data.n_t);
    let m = n * n_t;
    let mut rhs = vec![0.0; 2 * m];
    for k in 0..n_t {
        let (ur, vr) = (k * n, m + k * n);

        // f~^{k+1} = (beta/2)(b^k - c~^k) + (nu beta / 2 gamma) A b~^k
        //            [+ beta~ (B1 - I) b^k for the penalized scheme]
        let mut f = data.trace(Trace::B, k);
        axpy(&mut f, &data.trace(Trace::CTilde, k), -1.0);
        let mut f_total: Vec<f64> = f.iter().map(|x| x * p.beta / 2.0).collect();
        let ab = data.a_op.matvec(&data.trace(Trace::BTilde, k));
        axpy(&mut f_total, &ab, p.nu_over_gamma * p.beta / 2.0);

        // g~^{k+1} = (beta/2)(c^k - b~^k) - (nu beta / 2 gamma) B b~^k
        //            [- beta~ B2 b^k for the penalized scheme]
        let mut g = data.trace(Trace::C, k);
        axpy(&mut g, &data.trace(Trace::BTilde, k), -1.0);
        let mut g_total: Vec<f64> = g.iter().map(|x| x * p.beta / 2.0).collect();
        let bb = data.b_op.matvec(&data.trace(Trace::BTilde, k));
        axpy(&mut g_total, &bb, -p.nu_over_gamma * p.beta / 2.0);

        if penalized {
            let b_trace = data.trace(Trace::B, k);
            // beta~ * (B1 b^k - b^k)
            let b1b = blocks.b1.matvec(&b_trace);
            axpy(&mut f_total, &b1b, p.beta_tilde);
            axpy(&mut f_total, &b_trace, -p.beta_tilde);
            // -beta~ * B2 b^k
            let b2b = blocks.b2.matvec(&b_trace);
            axpy(&mut g_total, &b2b, -p.beta_tilde);
        }

        axpy(&mut rhs[ur..ur + n], &f_total, 1.0);
        axpy(&mut rhs[vr..vr + n], &g_total, 1.0);
    }
    // initial-data terms
    axpy(&mut rhs[0..n], &blocks.b1.matvec(&data.u0), 1.0);
    axpy(&mut rhs[0..n], &blocks.a1.matvec(&data.v0), -1.0);
    axpy(&mut rhs[m..m + n], &blocks.b2.matvec(&data.u0), -1.0);
    axpy(&mut rhs[m..m + n], &blocks.a2.matvec(&data.v0), 1.0);
    rhs
}

fn assemble_relaxation_layout(
    data: &TelegraphData,
    blocks: &RelaxationBlocks,
    rhs: Vec<f64>,
    rescaled: bool,
    scheme: Scheme,
) -> Result<SpaceTimeSystem> {
    let (n, n_t) = (data.n, data.n_t);
    let m = n * n_t;
    let tau = data.params.tau;
    let (l12_scale, l21_scale) = if rescaled { (1.0 / tau, tau) } else { (1.0, 1.0) };

    let mut triplets = Vec::new();
    for k in 0..n_t {
        let (ur, vr) = (k * n, m + k * n);
        push_identity(&mut triplets, ur, ur, n, 1.0);
        push_identity(&mut triplets, vr, vr, n, 1.0);
        if k > 0 {
            push_block(&mut triplets, ur, ur - n, &blocks.b1, -1.0);
            push_block(&mut triplets, ur, vr - n, &blocks.a1, l12_scale);
            push_block(&mut triplets, vr, ur - n, &blocks.b2, l21_scale);
            push_block(&mut triplets, vr, vr - n, &blocks.a2, -1.0);
        }
    }

    let mut rhs = rhs;
    if rescaled {
        for r in rhs[..m].iter_mut() {
            *r /= tau;
        }
    }
    let scaling = rescaled.then(|| VariableScaling {
        label: "u_slots_store_u_over_tau".to_string(),
        u_factor: 1.0 / tau,
    });
    two_field_system(data, scheme, triplets, rhs, scaling)
}

/// Diffusive relaxation scheme. With `rescaled`, builds the reformulated
/// system whose solution stores `U/tau` in the U slots (recorded in
/// `variable_scaling`).
pub fn build_relaxation_system(cfg: &ProblemConfig, rescaled: bool) -> Result<SpaceTimeSystem> {
    let expected = if rescaled { Scheme::RelaxationRescaled } else { Scheme::Relaxation };
    if cfg.scheme != expected {
        return Err(Error::config(format!(
            "build_relaxation_system(rescaled={rescaled}) needs scheme = {}",
            expected.label()
        )));
    }
    cfg.ensure_valid()?;
    let data = TelegraphData::new(cfg)?;
    let blocks = relaxation_blocks(&data)?;
    let rhs = relaxation_rhs(&data, &blocks, false);
    assemble_relaxation_layout(&data, &blocks, rhs, rescaled, expected)
}

/// Cap on the interior size for forming the penalized blocks densely.
pub const PENALIZED_DENSE_CAP: usize = 64;

/// Penalized diffusive relaxation scheme (`mu = 1`). The blocks compose with
/// `B~^{-1}` (`B~ = I - beta~ L_h`), formed densely below order
/// [`PENALIZED_DENSE_CAP`]; larger grids must use the marcher, which applies
/// `B~^{-1}` by solving.
pub fn build_penalized_system(cfg: &ProblemConfig) -> Result<SpaceTimeSystem> {
    if cfg.scheme != Scheme::Penalized {
        return Err(Error::config("build_penalized_system needs scheme = penalized".to_string()));
    }
    cfg.ensure_valid()?;
    let data = TelegraphData::new(cfg)?;
    let p = data.params;
    let n = data.n;
    if n >= PENALIZED_DENSE_CAP {
        return Err(Error::numerical(format!(
            "penalized explicit assembly forms B~^{{-1}} densely and is capped at interior size {PENALIZED_DENSE_CAP}; got {n}"
        )));
    }

    let l_h = build_laplacian_1d(n + 1)?;
    let b_tilde = SparseMatrix::identity(n).add_scaled(&l_h, -p.beta_tilde)?;
    // B~ is strictly diagonally dominant, hence invertible.
    let b_tilde_inv = b_tilde
        .to_dense()
        .try_inverse()
        .expect("B~ = I - beta~ L_h is strictly diagonally dominant");
    let b_tilde_inv = SparseMatrix::from_dense(&b_tilde_inv);

    let plain = relaxation_blocks(&data)?;
    // B1 = (B~ - I + B + (nu/gamma) A^2) B~^{-1}  and  B2 = (A + (nu/gamma) B A) B~^{-1}
    let b1_core = plain.b1.add_scaled(&b_tilde, 1.0)?.add_scaled(&SparseMatrix::identity(n), -1.0)?;
    let blocks = RelaxationBlocks {
        a1: plain.a1,
        a2: plain.a2,
        b1: b1_core.matmul(&b_tilde_inv)?,
        b2: plain.b2.matmul(&b_tilde_inv)?,
    };
    let rhs = relaxation_rhs(&data, &blocks, true);
    assemble_relaxation_layout(&data, &blocks, rhs, false, Scheme::Penalized)
}

/// Explicit multiscale scheme. With `rescaled`, applies the symmetrizing
/// `sqrt(eps)` change of variables so both off-diagonal block families equal
/// `A / sqrt(eps)`; the solution then stores `U/sqrt(eps)` in the U slots.
pub fn build_explicit_multiscale_system(cfg: &ProblemConfig, rescaled: bool) -> Result<SpaceTimeSystem> {
    if cfg.scheme != Scheme::ExplicitMultiscale {
        return Err(Error::config(
            "build_explicit_multiscale_system needs scheme = explicit_multiscale".to_string(),
        ));
    }
    cfg.ensure_valid()?;
    let data = TelegraphData::new(cfg)?;
    let p = data.params;
    let (n, n_t) = (data.n, data.n_t);
    let m = n * n_t;
    let eps = p.epsilon;
    let sqrt_eps = eps.sqrt();

    let l_h = build_laplacian_1d(n + 1)?;
    // B = I + (beta / (2 sqrt(eps))) L_h for this scheme
    let b_op = SparseMatrix::identity(n).add_scaled(&l_h, p.beta / (2.0 * sqrt_eps))?;
    // subdiagonal of the V block: -(B - (tau/eps) I)
    let b_minus = b_op.add_scaled(&SparseMatrix::identity(n), -p.tau / eps)?;

    let (l12_scale, l21_scale) = if rescaled {
        (1.0 / sqrt_eps, sqrt_eps / eps)
    } else {
        (1.0, 1.0 / eps)
    };

    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; 2 * m];
    for k in 0..n_t {
        let (ur, vr) = (k * n, m + k * n);
        push_identity(&mut triplets, ur, ur, n, 1.0);
        push_identity(&mut triplets, vr, vr, n, 1.0);
        if k > 0 {
            push_block(&mut triplets, ur, ur - n, &b_op, -1.0);
            push_block(&mut triplets, ur, vr - n, &data.a_op, l12_scale);
            push_block(&mut triplets, vr, ur - n, &data.a_op, l21_scale);
            push_block(&mut triplets, vr, vr - n, &b_minus, -1.0);
        }

        // f^{k+1} = (beta/2)(b^k / sqrt(eps) - c~^k)
        let mut f: Vec<f64> = data.trace(Trace::B, k).iter().map(|x| x / sqrt_eps).collect();
        axpy(&mut f, &data.trace(Trace::CTilde, k), -1.0);
        axpy(&mut rhs[ur..ur + n], &f, p.beta / 2.0);

        // g^{k+1} = (beta/2)(c^k / sqrt(eps) - b~^k / eps)
        let mut g: Vec<f64> = data.trace(Trace::C, k).iter().map(|x| x / sqrt_eps).collect();
        axpy(&mut g, &data.trace(Trace::BTilde, k), -1.0 / eps);
        axpy(&mut rhs[vr..vr + n], &g, p.beta / 2.0);
    }
    axpy(&mut rhs[0..n], &b_op.matvec(&data.u0), 1.0);
    axpy(&mut rhs[0..n], &data.a_op.matvec(&data.v0), -1.0);
    axpy(&mut rhs[m..m + n], &data.a_op.matvec(&data.u0), -1.0 / eps);
    axpy(&mut rhs[m..m + n], &b_minus.matvec(&data.v0), 1.0);

    if rescaled {
        for r in rhs[..m].iter_mut() {
            *r /= sqrt_eps;
        }
    }
    let scaling = rescaled.then(|| VariableScaling {
        label: "u_slots_store_u_over_sqrt_eps".to_string(),
        u_factor: 1.0 / sqrt_eps,
    });
    two_field_system(&data, Scheme::ExplicitMultiscale, triplets, rhs, scaling)
}
