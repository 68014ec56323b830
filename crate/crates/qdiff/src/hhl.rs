//! Ideal statevector simulation of the eigenvalue-inversion linear solver.
//!
//! Phase estimation is simulated exactly through the eigendecomposition of
//! the (symmetric) input matrix plus the analytic finite-register kernel, so
//! the output matches a gate-level ideal simulation while only touching one
//! clock-register vector per eigencomponent. Register layout: clock most
//! significant, then system, ancilla least significant.

use crate::assemble::{SpaceTimeSystem, VariableScaling};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use nalgebra::{Complex, DVector};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

type Complex64 = Complex<f64>;

/// Statevector cap for the system register.
pub const SYSTEM_DIM_CAP: usize = 1024;

/// Full statevector over clock ⊗ system ⊗ ancilla.
#[derive(Debug, Clone)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
    pub n_clock: usize,
    pub n_system: usize,
}

impl QuantumState {
    pub fn zeros(n_clock: usize, n_system: usize) -> Self {
        QuantumState {
            amplitudes: vec![Complex64::new(0.0, 0.0); 1 << (n_clock + n_system + 1)],
            n_clock,
            n_system,
        }
    }

    /// Flat index of `|clock = y, system = i, ancilla = a>`.
    pub fn index(&self, y: usize, i: usize, a: usize) -> usize {
        ((y << self.n_system) | i) << 1 | a
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn system_dim(&self) -> usize {
        1 << self.n_system
    }

    /// Marginal probability of each system basis state (clock and ancilla
    /// traced out).
    pub fn system_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.system_dim()];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            w[(idx >> 1) & (self.system_dim() - 1)] += amp.norm_sqr();
        }
        w
    }
}

/// Clock-register parameters of one run.
#[derive(Debug, Clone)]
pub struct HhlParams {
    pub n_clock: usize,
    /// Evolution time `t0 = 2 pi C_t / 2^{n_clock}`.
    pub t0: f64,
    /// Scaling constant `C_t = 10^p`.
    pub c_t: f64,
    /// Ancilla rotation constant, filled in by the solver.
    pub rotation_constant: f64,
    /// `|lambda|_max` used for the `t0` selection.
    pub lambda_max_estimate: f64,
    /// Why this `t0`: the integer part of `lambda * C_t` is representable in
    /// the clock register while `C_t` shifts the fractional part up.
    pub rationale: String,
}

/// Pick the evolution time from `|lambda|_max`: `C_t = 10^p` with
/// `p = floor(log10(2^{n_clock - 1} / lambda_max))`, `t0 = 2 pi C_t / 2^{n_clock}`.
pub fn choose_evolution_time(lambda_max: f64, n_clock: usize) -> Result<HhlParams> {
    if !(lambda_max > 0.0) {
        return Err(Error::config("lambda_max must be positive".to_string()));
    }
    if n_clock < 2 {
        return Err(Error::config("n_clock must be at least 2".to_string()));
    }
    let half_grid = ((1usize << (n_clock - 1)) as f64) / lambda_max;
    let p = half_grid.log10().floor() as i32;
    if p < 0 {
        return Err(Error::numerical(format!(
            "lambda_max = {lambda_max} too large for {n_clock} clock qubits: p = {p} < 0 \
             would need C_t < 1 and |lambda| t0 > pi"
        )));
    }
    let c_t = 10f64.powi(p);
    let t0 = 2.0 * PI * c_t / (1u64 << n_clock) as f64;
    debug_assert!(lambda_max * t0 <= PI + 1e-12);
    Ok(HhlParams {
        n_clock,
        t0,
        c_t,
        rotation_constant: 0.0,
        lambda_max_estimate: lambda_max,
        rationale: format!(
            "integer part of lambda*C_t representable in {n_clock} bits; C_t = 10^{p} shifts the fractional part up"
        ),
    })
}

/// Result of one statevector run.
#[derive(Debug, Clone)]
pub struct QuantumRunResult {
    /// Post-selected (ancilla = 1) normalized state.
    pub output_state: QuantumState,
    pub success_probability: f64,
    /// Overlap with the true normalized solution.
    pub fidelity: f64,
    pub params: HhlParams,
    /// Decay factor of the underlying history, when the caller supplies one.
    pub decay_g: Option<f64>,
}

/// In-place radix-2 FFT; `sign = +1` applies `sum_y a[y] e^{+2 pi i x y / N}`,
/// normalized by `1/sqrt(N)` (unitary).
fn fft_unitary(a: &mut [Complex64], sign: f64) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    // bit reversal
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * PI / len as f64;
        let wl = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = a[i + k];
                let v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
            i += len;
        }
        len <<= 1;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in a.iter_mut() {
        *x *= scale;
    }
}

/// In-place Walsh-Hadamard transform, unitary normalization.
fn walsh_hadamard(a: &mut [Complex64]) {
    let n = a.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        let mut i = 0;
        while i < n {
            for k in i..i + h {
                let (x, y) = (a[k], a[k + h]);
                a[k] = x + y;
                a[k + h] = x - y;
            }
            i += 2 * h;
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in a.iter_mut() {
        *x *= scale;
    }
}

/// Finite-register phase-estimation kernel: amplitudes over clock states `y`
/// for an eigenphase `phi`, i.e. `(1/N) sum_x e^{2 pi i x (phi - y/N)}`.
fn qpe_kernel(phi: f64, n_clock: usize) -> Vec<Complex64> {
    let n = 1usize << n_clock;
    let nf = n as f64;
    let scaled = phi * nf;
    let nearest = scaled.round();
    if (scaled - nearest).abs() < 1e-13 {
        // exact grid phase: a delta at y = round(phi N) mod N
        let mut k = vec![Complex64::new(0.0, 0.0); n];
        let y = (nearest.rem_euclid(nf)) as usize % n;
        k[y] = Complex64::new(1.0, 0.0);
        return k;
    }
    // geometric sum (1 - e^{2 pi i N phi}) / (1 - e^{2 pi i (phi - y/N)}) / N
    let num = Complex64::new(1.0, 0.0)
        - Complex64::new(0.0, 2.0 * PI * scaled.fract()).exp();
    (0..n)
        .map(|y| {
            let delta = phi - y as f64 / nf;
            let den = Complex64::new(1.0, 0.0) - Complex64::new(0.0, 2.0 * PI * delta).exp();
            num / den / nf
        })
        .collect()
}

/// Decode a clock basis state into its eigenvalue: `phi = y / 2^{n_clock}`,
/// with `phi >= 1/2` (the boundary included) decoding the negative branch.
fn decode_lambda(y: usize, n_clock: usize, t0: f64) -> f64 {
    let n = 1usize << n_clock;
    let phi = y as f64 / n as f64;
    if phi < 0.5 {
        2.0 * PI * phi / t0
    } else {
        2.0 * PI * (phi - 1.0) / t0
    }
}

/// Statevector run of the eigenvalue-inversion solver on a symmetric `H`.
///
/// Steps: prepare `|b>`; exact phase-estimation expansion in the
/// eigenbasis with finite-register leakage; ancilla rotation by `C/lambda`
/// decoded from each clock state; uncompute; post-select ancilla = 1.
/// Fidelity is measured against the direct solution `H^{-1} b`.
pub fn hhl_solve(h: &SparseMatrix, b: &[f64], params: &HhlParams) -> Result<QuantumRunResult> {
    if !h.symmetric() {
        return Err(Error::config("hhl_solve needs a symmetric matrix".to_string()));
    }
    let order = h.n_rows();
    if order > SYSTEM_DIM_CAP {
        return Err(Error::numerical(format!(
            "system register capped at dimension {SYSTEM_DIM_CAP}, got {order}"
        )));
    }
    if b.len() != order {
        return Err(Error::numerical("right-hand side length mismatch"));
    }
    let b_norm = crate::sparse::norm2(b);
    if b_norm == 0.0 {
        return Err(Error::config("right-hand side must be nonzero".to_string()));
    }
    let n_system = (usize::BITS - (order - 1).max(1).leading_zeros()) as usize;
    let sys_dim = 1usize << n_system;
    let n_clock = params.n_clock;
    let clock_dim = 1usize << n_clock;

    // eigendecomposition and eigenbasis expansion of |b>
    let dense = h.to_dense();
    let eig = dense.clone().symmetric_eigen();
    let b_hat = DVector::from_iterator(order, b.iter().map(|x| x / b_norm));
    let coeffs = eig.eigenvectors.transpose() * &b_hat;

    // reference solution H^{-1} b
    let x_true = dense
        .lu()
        .solve(&DVector::from_column_slice(b))
        .ok_or_else(|| Error::numerical("matrix is singular"))?;
    let x_true_norm = x_true.norm();
    if x_true_norm == 0.0 {
        return Err(Error::numerical("reference solution is zero"));
    }

    // clock distribution before rotation, for the rotation-constant choice
    let kernels: Vec<Vec<Complex64>> = (0..order)
        .map(|k| {
            let phi = (eig.eigenvalues[k] * params.t0 / (2.0 * PI)).rem_euclid(1.0);
            qpe_kernel(phi, n_clock)
        })
        .collect();
    let mut clock_mass = vec![0.0f64; clock_dim];
    for k in 0..order {
        let ck2 = coeffs[k] * coeffs[k];
        for (y, amp) in kernels[k].iter().enumerate() {
            clock_mass[y] += ck2 * amp.norm_sqr();
        }
    }

    let decoded: Vec<f64> = (0..clock_dim)
        .map(|y| decode_lambda(y, n_clock, params.t0))
        .collect();
    // A degenerate evolution time maps some eigenvalue's phase onto the
    // zero clock state, where the inversion is undefined. Leakage tails at
    // that state are fine; they rotate to nothing and are discarded by the
    // post-selection.
    for k in 0..order {
        if coeffs[k] * coeffs[k] > 1e-12 {
            let phi = (eig.eigenvalues[k] * params.t0 / (2.0 * PI)).rem_euclid(1.0);
            let nearest = (phi * clock_dim as f64).round() as usize % clock_dim;
            if nearest == 0 {
                return Err(Error::numerical(format!(
                    "eigenvalue {} decodes to the zero clock state; evolution time is degenerate",
                    eig.eigenvalues[k]
                )));
            }
        }
    }
    let c_rot = decoded
        .iter()
        .zip(&clock_mass)
        .filter(|&(l, &m)| *l != 0.0 && m > 1e-12)
        .map(|(l, _)| l.abs())
        .fold(f64::INFINITY, f64::min);
    if !c_rot.is_finite() {
        return Err(Error::numerical("no clock state carries amplitude mass"));
    }

    // per clock state: ancilla amplitudes (sqrt(1-(C/l)^2), C/l)
    let rot: Vec<(f64, f64)> = decoded
        .iter()
        .map(|&l| {
            if l == 0.0 {
                (1.0, 0.0)
            } else {
                let r = c_rot / l;
                ((1.0 - r * r).max(0.0).sqrt(), r)
            }
        })
        .collect();

    // assemble the post-QPE, post-rotation, post-uncompute state
    let mut state0 = QuantumState::zeros(n_clock, n_system);
    let mut state1 = QuantumState::zeros(n_clock, n_system);
    let mut buf0 = vec![Complex64::new(0.0, 0.0); clock_dim];
    let mut buf1 = vec![Complex64::new(0.0, 0.0); clock_dim];
    for k in 0..order {
        if coeffs[k].abs() < 1e-300 {
            continue;
        }
        for y in 0..clock_dim {
            buf0[y] = kernels[k][y] * rot[y].0;
            buf1[y] = kernels[k][y] * rot[y].1;
        }
        // uncompute W_k^dagger = Had . diag(e^{-i lambda t0 x}) . QFT
        for buf in [&mut buf0, &mut buf1] {
            fft_unitary(buf, 1.0);
            for (x, amp) in buf.iter_mut().enumerate() {
                *amp *= Complex64::new(0.0, -eig.eigenvalues[k] * params.t0 * x as f64).exp();
            }
            walsh_hadamard(buf);
        }
        let ck = coeffs[k];
        for y in 0..clock_dim {
            let (a0, a1) = (buf0[y] * ck, buf1[y] * ck);
            if a0.norm_sqr() + a1.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..order {
                let vki = eig.eigenvectors[(i, k)];
                if vki != 0.0 {
                    let idx0 = state0.index(y, i, 0);
                    let idx1 = state1.index(y, i, 1);
                    state0.amplitudes[idx0] += a0 * vki;
                    state1.amplitudes[idx1] += a1 * vki;
                }
            }
        }
    }

    let mass0: f64 = state0.amplitudes.iter().map(|c| c.norm_sqr()).sum();
    let mass1: f64 = state1.amplitudes.iter().map(|c| c.norm_sqr()).sum();
    let total = mass0 + mass1;
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::numerical(format!(
            "norm drifted through the unitary stages: {total}"
        )));
    }
    if mass1 <= 0.0 {
        return Err(Error::numerical("post-selection mass is zero"));
    }

    // post-select ancilla = 1 and normalize
    let scale = 1.0 / mass1.sqrt();
    let mut output = state1;
    for amp in output.amplitudes.iter_mut() {
        *amp *= scale;
    }
    // amplitudes beyond the matrix order stay exactly zero
    debug_assert!((order..sys_dim).all(|i| {
        (0..clock_dim).all(|y| output.amplitudes[output.index(y, i, 1)].norm_sqr() == 0.0)
    }));

    let reference: Vec<f64> = x_true.iter().map(|x| x / x_true_norm).collect();
    let fid = fidelity(&output, &reference)?;

    let mut params_out = params.clone();
    params_out.rotation_constant = c_rot;
    Ok(QuantumRunResult {
        output_state: output,
        success_probability: mass1,
        fidelity: fid,
        params: params_out,
        decay_g: None,
    })
}

/// Overlap `sqrt(<r| rho_sys |r>)` between the system-register reduced state
/// and a normalized reference vector; equals `|<r|psi>|` whenever the clock
/// and ancilla registers are unentangled from the system.
pub fn fidelity(state: &QuantumState, reference: &[f64]) -> Result<f64> {
    let r_norm = crate::sparse::norm2(reference);
    if r_norm == 0.0 {
        return Err(Error::config("fidelity reference must be nonzero".to_string()));
    }
    let sys_dim = state.system_dim();
    if reference.len() > sys_dim {
        return Err(Error::numerical("reference longer than the system register"));
    }
    let clock_dim = 1usize << state.n_clock;
    let mut acc = 0.0f64;
    for y in 0..clock_dim {
        for a in 0..2usize {
            let mut overlap = Complex64::new(0.0, 0.0);
            for (i, r) in reference.iter().enumerate() {
                overlap += state.amplitudes[state.index(y, i, a)] * (r / r_norm);
            }
            acc += overlap.norm_sqr();
        }
    }
    Ok(acc.sqrt().min(1.0))
}

/// Append trivial equations `x^{n+1} = x^n` for `N_t` further steps to every
/// field, so the final state occupies half of the history's mass budget.
pub fn pad_history_state(system: &SpaceTimeSystem) -> Result<SpaceTimeSystem> {
    let n = system.block_size;
    let n_t = system.n_steps;
    let fields = system.n_fields;
    let new_steps = 2 * n_t;
    let new_order = n * new_steps * fields;

    let remap = |old: usize| -> usize {
        let field = old / (n * n_t);
        let within = old % (n * n_t);
        field * n * new_steps + within
    };

    let mut triplets: Vec<(usize, usize, f64)> = system
        .matrix
        .entries()
        .map(|(r, c, v)| (remap(r), remap(c), v))
        .collect();
    let mut rhs = vec![0.0; new_order];
    for (old, &val) in system.rhs.iter().enumerate() {
        rhs[remap(old)] = val;
    }
    for field in 0..fields {
        let base = field * n * new_steps;
        for k in n_t..new_steps {
            for i in 0..n {
                triplets.push((base + k * n + i, base + k * n + i, 1.0));
                triplets.push((base + k * n + i, base + (k - 1) * n + i, -1.0));
            }
        }
    }

    SpaceTimeSystem {
        matrix: SparseMatrix::from_triplets(new_order, new_order, triplets)?,
        rhs,
        block_size: n,
        n_steps: new_steps,
        n_fields: fields,
        scheme: system.scheme,
        variable_scaling: system.variable_scaling.clone(),
    }
    .check()
}

/// Normalization bookkeeping for history-state observables.
#[derive(Debug, Clone, Copy)]
pub enum HistoryNormalization {
    /// Unpadded history: the estimator carries `N_t * N_u0^2`.
    Plain { n_t: usize, initial_norm_sq: f64 },
    /// Padded history: the estimator carries `2 * N_u0^2`.
    Padded { initial_norm_sq: f64 },
}

impl HistoryNormalization {
    pub fn factor(&self) -> f64 {
        match self {
            HistoryNormalization::Plain { n_t, initial_norm_sq } => {
                *n_t as f64 * initial_norm_sq
            }
            HistoryNormalization::Padded { initial_norm_sq } => 2.0 * initial_norm_sq,
        }
    }
}

/// Density-style observable `rho(t_step, x_site)` read from the history
/// state: the marginal probability of the `(step, site)` basis state times
/// the recorded normalization.
pub fn observable_expectation(
    state: &QuantumState,
    site: usize,
    step: usize,
    block_size: usize,
    normalization: HistoryNormalization,
) -> Result<f64> {
    let sys_idx = step
        .checked_mul(block_size)
        .and_then(|b| b.checked_add(site))
        .ok_or_else(|| Error::numerical("index overflow"))?;
    if site >= block_size || sys_idx >= state.system_dim() {
        return Err(Error::numerical(format!(
            "observable index (step {step}, site {site}) out of range"
        )));
    }
    Ok(state.system_weights()[sys_idx] * normalization.factor())
}

/// Chebyshev sample bound `n >= Var(O) / ((1 - confidence) precision^2)` for
/// estimating an observable to `precision` with probability `confidence`.
pub fn required_samples(variance: f64, precision: f64, confidence: f64) -> Result<f64> {
    if !(precision > 0.0) || !(0.0..1.0).contains(&confidence) || variance < 0.0 {
        return Err(Error::config(
            "need precision > 0, confidence in [0,1), variance >= 0".to_string(),
        ));
    }
    Ok(variance / ((1.0 - confidence) * precision * precision))
}

/// Decay factor of a marched history; re-exported from the marcher for the
/// amplification-cost bookkeeping.
pub use crate::march::decay_factor_g;

/// Binary state dump: a one-line JSON header (clock size, system size,
/// evolution-time parameters) followed by little-endian `(re, im)` pairs.
pub fn write_state_dump(state: &QuantumState, params: &HhlParams, path: &Path) -> Result<()> {
    let header = serde_json::json!({
        "n_t": state.n_clock,
        "n_s": state.n_system,
        "t0": params.t0,
        "c_t": params.c_t,
        "rotation_constant": params.rotation_constant,
        "lambda_max_estimate": params.lambda_max_estimate,
    });
    let mut bytes = serde_json::to_string(&header)?.into_bytes();
    bytes.push(b'\n');
    for amp in &state.amplitudes {
        bytes.extend_from_slice(&amp.re.to_le_bytes());
        bytes.extend_from_slice(&amp.im.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// CSV of `|amplitude|^2` per `(step, site)` of the system register.
pub fn state_csv_by_site(state: &QuantumState, block_size: usize, scaling: Option<&VariableScaling>) -> String {
    let weights = state.system_weights();
    let mut out = String::from("step,site,probability,u_factor\n");
    let u_factor = scaling.map_or(1.0, |s| s.u_factor);
    for (idx, w) in weights.iter().enumerate() {
        let step = idx / block_size;
        let site = idx % block_size;
        let _ = writeln!(out, "{step},{site},{w},{u_factor}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble::build_ode_theta;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fft_matches_naive_dft() {
        let n = 8usize;
        let mut a: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let orig = a.clone();
        fft_unitary(&mut a, 1.0);
        for x in 0..n {
            let mut want = Complex64::new(0.0, 0.0);
            for (y, o) in orig.iter().enumerate() {
                want += o * Complex64::new(0.0, 2.0 * PI * (x * y) as f64 / n as f64).exp();
            }
            want /= (n as f64).sqrt();
            assert_abs_diff_eq!(a[x].re, want.re, epsilon = 1e-12);
            assert_abs_diff_eq!(a[x].im, want.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn walsh_hadamard_is_involutive() {
        let mut a: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let orig = a.clone();
        walsh_hadamard(&mut a);
        walsh_hadamard(&mut a);
        for (x, o) in a.iter().zip(&orig) {
            assert_abs_diff_eq!(x.re, o.re, epsilon = 1e-12);
            assert_abs_diff_eq!(x.im, o.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn kernel_mass_is_unit() {
        for phi in [0.25, 0.3217, 0.9] {
            let k = qpe_kernel(phi, 6);
            let mass: f64 = k.iter().map(|c| c.norm_sqr()).sum();
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn evolution_time_reference_case() {
        let p = choose_evolution_time(3.0, 10).unwrap();
        assert_abs_diff_eq!(p.c_t, 100.0);
        assert_abs_diff_eq!(p.t0, 2.0 * PI * 100.0 / 1024.0, epsilon = 1e-15);
        assert!(3.0 * p.t0 <= PI);
        // lambda_max at the half-grid boundary: p = 0, C_t = 1
        let p = choose_evolution_time(512.0, 10).unwrap();
        assert_abs_diff_eq!(p.c_t, 1.0);
        // too large for the register
        assert!(choose_evolution_time(2000.0, 10).is_err());
    }

    #[test]
    fn identity_system_returns_b_with_unit_success() {
        let h = SparseMatrix::identity(3);
        let b = vec![0.6, 0.0, 0.8];
        let params = choose_evolution_time(1.0, 6).unwrap();
        let r = hhl_solve(&h, &b, &params).unwrap();
        assert!(r.fidelity >= 1.0 - 1e-12, "fidelity {}", r.fidelity);
        assert_abs_diff_eq!(r.success_probability, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.params.rotation_constant, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exact_phase_two_by_two() {
        // eigenvalues +/-2; choose t0 so phi in {1/4, 3/4} exactly
        let h = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0)]).unwrap();
        let params = HhlParams {
            n_clock: 3,
            t0: PI / 4.0, // phi = lambda t0 / 2pi = +/- 1/4
            c_t: 1.0,
            rotation_constant: 0.0,
            lambda_max_estimate: 2.0,
            rationale: String::new(),
        };
        let r = hhl_solve(&h, &[1.0, 0.0], &params).unwrap();
        assert!(r.fidelity >= 1.0 - 1e-9, "fidelity {}", r.fidelity);
        // solution direction is [0, 0.5]
        let w = r.output_state.system_weights();
        assert!(w[1] > 0.99 && w[0] < 1e-9, "weights {w:?}");
    }

    #[test]
    fn unitarity_guard_and_mass_accounting() {
        let sys = build_ode_theta(1.0, 0.5, 0.25, 4, 1.0).unwrap();
        let h = crate::assemble::hermitian_dilation(&sys.matrix);
        let mut b = vec![0.0; h.n_rows()];
        b[..sys.rhs.len()].copy_from_slice(&sys.rhs);
        let sv = crate::spectra::singular_values_dense(&sys.matrix).unwrap();
        let params = choose_evolution_time(sv[0], 8).unwrap();
        let r = hhl_solve(&h, &b, &params).unwrap();
        assert!(r.success_probability > 0.0 && r.success_probability <= 1.0 + 1e-12);
        assert_abs_diff_eq!(r.output_state.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nonsymmetric_rejected_before_simulation() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 1, 1.0)]).unwrap();
        let params = choose_evolution_time(1.0, 4).unwrap();
        assert!(hhl_solve(&m, &[1.0, 0.0], &params).is_err());
    }

    #[test]
    fn fidelity_identities() {
        let mut state = QuantumState::zeros(2, 2);
        let idx = state.index(0, 1, 0);
        state.amplitudes[idx] = Complex64::new(1.0, 0.0);
        let f = fidelity(&state, &[0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-14);
        let f = fidelity(&state, &[1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-14);
        assert!(fidelity(&state, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn padding_single_step() {
        let sys = build_ode_theta(1.0, 1.0, 0.5, 1, 1.0).unwrap();
        let padded = pad_history_state(&sys).unwrap();
        assert_eq!(padded.n_steps, 2);
        let s = crate::march::solve_spacetime_direct(&padded).unwrap();
        assert_abs_diff_eq!(s[0], s[1], epsilon = 1e-14);
    }

    #[test]
    fn padding_ode_copies_final_state() {
        let sys = build_ode_theta(1.0, 0.0, 0.5, 2, 1.0).unwrap();
        let padded = pad_history_state(&sys).unwrap();
        let s = crate::march::solve_spacetime_direct(&padded).unwrap();
        let want = [0.5, 0.25, 0.25, 0.25];
        for (x, w) in s.iter().zip(want) {
            assert_abs_diff_eq!(*x, w, epsilon = 1e-13);
        }
    }

    #[test]
    fn padded_mass_fraction_for_equal_norms() {
        // all step norms equal: the padded tail holds exactly half the mass
        let sys = build_ode_theta(1.0, 1.0, 0.0000001, 3, 1.0).unwrap();
        let padded = pad_history_state(&sys).unwrap();
        let s = crate::march::solve_spacetime_direct(&padded).unwrap();
        let total: f64 = s.iter().map(|x| x * x).sum();
        let tail: f64 = s[3..].iter().map(|x| x * x).sum();
        assert_abs_diff_eq!(tail / total, 0.5, epsilon = 1e-5);
    }

    #[test]
    fn observable_uniform_state() {
        let mut state = QuantumState::zeros(1, 2);
        for i in 0..4 {
            let idx = state.index(0, i, 0);
            state.amplitudes[idx] = Complex64::new(0.5, 0.0);
        }
        let norm = HistoryNormalization::Plain { n_t: 1, initial_norm_sq: 1.0 };
        let rho = observable_expectation(&state, 1, 1, 2, norm).unwrap();
        assert_abs_diff_eq!(rho, 0.25, epsilon = 1e-14);
        assert!(observable_expectation(&state, 2, 1, 2, norm).is_err());
    }

    #[test]
    fn sample_bound_reference_value() {
        let n = required_samples(1.0, 0.1, 0.9).unwrap();
        assert_abs_diff_eq!(n, 1000.0, epsilon = 1e-9);
        assert!(required_samples(1.0, 0.0, 0.9).is_err());
    }

    #[test]
    fn padded_normalization_is_nt_free() {
        let plain = HistoryNormalization::Plain { n_t: 7, initial_norm_sq: 2.0 };
        let padded = HistoryNormalization::Padded { initial_norm_sq: 2.0 };
        assert_abs_diff_eq!(plain.factor(), 14.0);
        assert_abs_diff_eq!(padded.factor(), 4.0);
    }
}
