//! Parameter sweeps, scaling-exponent fits, and report emission.

use crate::assemble::{self, SpaceTimeSystem};
use crate::config::{Equation, ProblemConfig, Scheme};
use crate::error::{Error, Result};
use crate::march;
use crate::spectra::{self, SpectralMethod};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// One sweep point. Field order is the canonical report column order:
/// config fields first, then metrics, alphabetical within each group.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityRecord {
    pub a: f64,
    pub c_p: f64,
    pub d: usize,
    pub equation: String,
    pub h: f64,
    pub iota: f64,
    pub n_t: usize,
    pub n_x: usize,
    pub scheme: String,
    pub tau: f64,
    pub theta: f64,
    pub classical_ops: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub method: String,
    pub q_estimate: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub sparsity: usize,
    pub wall_time_ms: f64,
}

const RECORD_COLUMNS: [&str; 21] = [
    "a", "c_p", "d", "equation", "h", "iota", "n_t", "n_x", "scheme", "tau", "theta",
    "classical_ops", "delta", "epsilon", "kappa", "method", "q_estimate", "sigma_max",
    "sigma_min", "sparsity", "wall_time_ms",
];

impl ComplexityRecord {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.a,
            self.c_p,
            self.d,
            self.equation,
            self.h,
            self.iota,
            self.n_t,
            self.n_x,
            self.scheme,
            self.tau,
            self.theta,
            self.classical_ops,
            self.delta,
            self.epsilon,
            self.kappa,
            self.method,
            self.q_estimate,
            self.sigma_max,
            self.sigma_min,
            self.sparsity,
            self.wall_time_ms
        )
    }
}

/// Least-squares power-law fit through `(x, y)` points.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingFit {
    pub x_name: String,
    pub y_name: String,
    pub points: Vec<(f64, f64)>,
    /// Slope of `log y` against `log x`.
    pub exponent: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on `(log x, log y)`; needs at least 3 positive
/// points.
pub fn fit_scaling_exponent(
    x_name: &str,
    y_name: &str,
    points: &[(f64, f64)],
) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::config(format!(
            "scaling fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::config("scaling fit needs positive data".to_string()));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::config("scaling fit needs distinct x values".to_string()));
    }
    let exponent = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok(ScalingFit {
        x_name: x_name.to_string(),
        y_name: y_name.to_string(),
        points: points.to_vec(),
        exponent,
        r_squared,
    })
}

/// Query-complexity estimate `s * kappa * ln(1/delta)` (natural logarithm,
/// so reported numbers are reproducible).
pub fn query_complexity_estimate(sparsity: usize, kappa: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::config(format!("delta = {delta} outside (0, 1)")));
    }
    if !kappa.is_finite() {
        return Err(Error::numerical("kappa must be finite".to_string()));
    }
    Ok(sparsity as f64 * kappa * (1.0 / delta).ln())
}

/// Default smooth initial data per equation, used when a sweep or the CLI
/// has no problem-specific closure: a product of half-period sines for the
/// heat equation (zero boundary) and a shifted sine bump for transport.
pub fn default_initial(cfg: &ProblemConfig) -> impl Fn(&[f64]) -> f64 + Send + Sync {
    let eq = cfg.equation;
    let (lo, hi) = (cfg.domain_lo, cfg.domain_hi);
    move |p: &[f64]| match eq {
        Equation::Ode => 1.0,
        Equation::Heat => p
            .iter()
            .map(|x| (std::f64::consts::PI * (x - lo) / (hi - lo)).sin())
            .product(),
        Equation::Hyperbolic => p
            .iter()
            .map(|x| {
                let s = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                (std::f64::consts::PI * s).sin().powi(2)
            })
            .product(),
        Equation::Telegraph => 0.0, // telegraph uses the manufactured solution
    }
}

/// Assemble the scheme's natural all-at-once system.
pub fn assemble_system(cfg: &ProblemConfig) -> Result<SpaceTimeSystem> {
    let initial = default_initial(cfg);
    match cfg.scheme {
        Scheme::Theta if cfg.equation == Equation::Ode => {
            assemble::build_ode_theta(cfg.a, cfg.theta, cfg.tau(), cfg.n_t, 1.0)
        }
        Scheme::Theta => assemble::build_heat_system(cfg, &initial),
        Scheme::Upwind => assemble::build_upwind_hyperbolic(cfg, &initial),
        Scheme::Imex => assemble::build_imex_system(cfg),
        Scheme::PreconditionedImex => assemble::build_preconditioned_imex_system(cfg),
        Scheme::Relaxation => assemble::build_relaxation_system(cfg, false),
        Scheme::RelaxationRescaled => assemble::build_relaxation_system(cfg, true),
        Scheme::Penalized => assemble::build_penalized_system(cfg),
        Scheme::ExplicitMultiscale => assemble::build_explicit_multiscale_system(cfg, false),
    }
}

/// Options shared by the sweep drivers.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub dense_cap: usize,
    pub iterative_tol: f64,
    /// Also run the marcher and record counted operations.
    pub count_ops: bool,
    /// Override for the explicit-march step cap.
    pub force: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            dense_cap: spectra::DENSE_SVD_CAP,
            iterative_tol: 1e-6,
            count_ops: true,
            force: false,
        }
    }
}

/// Evaluate one sweep point.
pub fn evaluate_point(cfg: &ProblemConfig, opts: &SweepOptions) -> Result<ComplexityRecord> {
    let start = Instant::now();
    let system = assemble_system(cfg)?;
    let report = spectra::analyze_system(&system, Some(cfg), opts.dense_cap, opts.iterative_tol)?;
    let classical_ops = if opts.count_ops {
        let initial = default_initial(cfg);
        let result = if cfg.scheme == Scheme::ExplicitMultiscale {
            march::march_explicit_multiscale(cfg, opts.force)?
        } else {
            march::march_scheme(cfg, &initial)?
        };
        result.ops.total()
    } else {
        0
    };
    let q_estimate = query_complexity_estimate(report.sparsity, report.kappa, cfg.delta)?;
    Ok(ComplexityRecord {
        a: cfg.a,
        c_p: cfg.c_p,
        d: cfg.d,
        equation: cfg.equation.label().to_string(),
        h: cfg.h(),
        iota: cfg.iota,
        n_t: cfg.n_t,
        n_x: cfg.n_x,
        scheme: cfg.scheme.label().to_string(),
        tau: cfg.tau(),
        theta: cfg.theta,
        classical_ops,
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        kappa: report.kappa,
        method: match report.method {
            SpectralMethod::DenseSvd => "DenseSVD".to_string(),
            SpectralMethod::Iterative => "Iterative".to_string(),
            SpectralMethod::BoundsOnly => "BoundsOnly".to_string(),
        },
        q_estimate,
        sigma_max: report.sigma_max,
        sigma_min: report.sigma_min,
        sparsity: report.sparsity,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Thread cap for sweeps: `QDIFF_THREADS`, defaulting to the machine
/// parallelism.
pub fn sweep_threads() -> usize {
    std::env::var("QDIFF_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
}

/// Run sweep points concurrently; results keep the input order.
fn run_points(configs: Vec<ProblemConfig>, opts: &SweepOptions) -> Result<Vec<ComplexityRecord>> {
    let threads = sweep_threads().min(configs.len().max(1));
    let mut slots: Vec<Option<Result<ComplexityRecord>>> = Vec::new();
    slots.resize_with(configs.len(), || None);
    if threads <= 1 {
        for (i, cfg) in configs.iter().enumerate() {
            slots[i] = Some(evaluate_point(cfg, opts));
        }
    } else {
        let slot_refs: Vec<_> = slots.iter_mut().collect();
        std::thread::scope(|scope| {
            let mut pending: Vec<(usize, &ProblemConfig, &mut Option<Result<ComplexityRecord>>)> =
                configs
                    .iter()
                    .zip(slot_refs)
                    .enumerate()
                    .map(|(i, (cfg, slot))| (i, cfg, slot))
                    .collect();
            let mut buckets: Vec<Vec<_>> = Vec::new();
            buckets.resize_with(threads, Vec::new);
            for item in pending.drain(..) {
                let b = item.0 % threads;
                buckets[b].push(item);
            }
            for bucket in buckets {
                scope.spawn(move || {
                    for (_, cfg, slot) in bucket {
                        *slot = Some(evaluate_point(cfg, opts));
                    }
                });
            }
        });
    }
    slots
        .into_iter()
        .map(|s| s.expect("every sweep slot is filled"))
        .collect()
}

/// Sweep the scaling parameter over a list of values at fixed steps.
pub fn sweep_epsilon(
    base: &ProblemConfig,
    epsilons: &[f64],
    opts: &SweepOptions,
) -> Result<Vec<ComplexityRecord>> {
    if epsilons.len() < 2 {
        return Err(Error::config(format!(
            "epsilon sweep needs at least 2 values, got {}",
            epsilons.len()
        )));
    }
    let configs: Vec<ProblemConfig> = epsilons
        .iter()
        .map(|&eps| {
            let mut cfg = base.clone();
            cfg.epsilon = eps;
            cfg
        })
        .collect();
    run_points(configs, opts)
}

/// Sweep the spatial resolution (time resolution for the ODE), applying the
/// scheme's step-size policy at each point.
pub fn sweep_resolution(
    base: &ProblemConfig,
    resolutions: &[usize],
    opts: &SweepOptions,
) -> Result<Vec<ComplexityRecord>> {
    if resolutions.len() < 3 {
        return Err(Error::config(format!(
            "resolution sweep needs at least 3 values, got {}",
            resolutions.len()
        )));
    }
    let mut configs = Vec::with_capacity(resolutions.len());
    for &r in resolutions {
        let mut cfg = base.clone();
        if cfg.equation == Equation::Ode {
            cfg.n_t = r;
        } else {
            cfg.n_x = r;
            cfg = crate::config::apply_step_policy(&cfg)?;
        }
        configs.push(cfg);
    }
    run_points(configs, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Serialize records with the stable column order; output is byte-identical
/// across runs for identical inputs.
pub fn render_report(records: &[ComplexityRecord], format: ReportFormat) -> Result<String> {
    if records.is_empty() {
        return Err(Error::config("report needs at least one record".to_string()));
    }
    match format {
        ReportFormat::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", RECORD_COLUMNS.join(","));
            for r in records {
                let _ = writeln!(out, "{}", r.csv_row());
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(records)?;
            out.push('\n');
            Ok(out)
        }
    }
}

pub fn emit_report(records: &[ComplexityRecord], format: ReportFormat, path: &Path) -> Result<()> {
    let text = render_report(records, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Parse records back from the JSON report (used by the report subcommand).
pub fn parse_json_report(text: &str) -> Result<Vec<ComplexityRecord>> {
    #[derive(serde::Deserialize)]
    struct Rec {
        a: f64,
        c_p: f64,
        d: usize,
        equation: String,
        h: f64,
        iota: f64,
        n_t: usize,
        n_x: usize,
            scheme: String,
        tau: f64,
        theta: f64,
        classical_ops: u64,
        delta: f64,
        epsilon: f64,
        kappa: f64,
        method: String,
        q_estimate: f64,
        sigma_max: f64,
        sigma_min: f64,
        sparsity: usize,
        wall_time_ms: f64,
    }
    let recs: Vec<Rec> = serde_json::from_str(text)?;
    Ok(recs
        .into_iter()
        .map(|r| ComplexityRecord {
            a: r.a,
            c_p: r.c_p,
            d: r.d,
            equation: r.equation,
            h: r.h,
            iota: r.iota,
            n_t: r.n_t,
            n_x: r.n_x,
            scheme: r.scheme,
            tau: r.tau,
            theta: r.theta,
            classical_ops: r.classical_ops,
            delta: r.delta,
            epsilon: r.epsilon,
            kappa: r.kappa,
            method: r.method,
            q_estimate: r.q_estimate,
            sigma_max: r.sigma_max,
            sigma_min: r.sigma_min,
            sparsity: r.sparsity,
            wall_time_ms: r.wall_time_ms,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn fit_exact_square_law() {
        let f = fit_scaling_exponent("x", "y", &[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert_abs_diff_eq!(f.exponent, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_constant_data() {
        let f = fit_scaling_exponent("x", "y", &[(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(f.exponent, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_rejects_bad_data() {
        assert!(fit_scaling_exponent("x", "y", &[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_scaling_exponent("x", "y", &[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn q_estimate_reference() {
        let q = query_complexity_estimate(2, 10.0, (-1.0f64).exp()).unwrap();
        assert_abs_diff_eq!(q, 20.0, epsilon = 1e-12);
        assert!(query_complexity_estimate(2, 10.0, 1.5).is_err());
    }

    #[test]
    fn epsilon_sweep_needs_two_values() {
        let cfg = ProblemConfig::new(Equation::Telegraph, Scheme::PreconditionedImex);
        assert!(sweep_epsilon(&cfg, &[1e-2], &SweepOptions::default()).is_err());
    }

    #[test]
    fn sweep_order_is_input_order() {
        let mut cfg = ProblemConfig::new(Equation::Telegraph, Scheme::PreconditionedImex);
        cfg.n_x = 4;
        cfg.n_t = 10;
        let opts = SweepOptions { count_ops: false, ..SweepOptions::default() };
        let eps = [1e-2, 1e-6, 1e-4];
        let recs = sweep_epsilon(&cfg, &eps, &opts).unwrap();
        let got: Vec<f64> = recs.iter().map(|r| r.epsilon).collect();
        assert_eq!(got, eps.to_vec());
        // permuting inputs permutes outputs identically
        let eps_perm = [1e-4, 1e-2, 1e-6];
        let recs_perm = sweep_epsilon(&cfg, &eps_perm, &opts).unwrap();
        for (r, &e) in recs_perm.iter().zip(&eps_perm) {
            assert_eq!(r.epsilon, e);
            let original = recs.iter().find(|x| x.epsilon == e).unwrap();
            assert_eq!(r.kappa, original.kappa);
        }
    }

    #[test]
    fn q_estimate_recomputes_from_record_fields() {
        let mut cfg = ProblemConfig::new(Equation::Telegraph, Scheme::PreconditionedImex);
        cfg.n_x = 4;
        cfg.n_t = 8;
        cfg.epsilon = 1e-4;
        let rec = evaluate_point(&cfg, &SweepOptions::default()).unwrap();
        let q = query_complexity_estimate(rec.sparsity, rec.kappa, rec.delta).unwrap();
        assert_abs_diff_eq!(rec.q_estimate, q, epsilon = 1e-12);
    }

    #[test]
    fn report_is_deterministic() {
        let mut cfg = ProblemConfig::new(Equation::Telegraph, Scheme::PreconditionedImex);
        cfg.n_x = 4;
        cfg.n_t = 6;
        let opts = SweepOptions { count_ops: false, ..SweepOptions::default() };
        let recs = sweep_epsilon(&cfg, &[1e-2, 1e-4], &opts).unwrap();
        let a = render_report(&recs, ReportFormat::Csv).unwrap();
        let b = render_report(&recs, ReportFormat::Csv).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("a,c_p,d,equation,"));
        let j = render_report(&recs, ReportFormat::Json).unwrap();
        let parsed = parse_json_report(&j).unwrap();
        assert_eq!(parsed.len(), 2);
        assert!(render_report(&[], ReportFormat::Csv).is_err());
    }
}
