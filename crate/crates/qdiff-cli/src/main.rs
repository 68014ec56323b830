//! Command-line front end: assemble systems, analyze spectra, march and
//! solve, run the statevector solver, sweep parameters, and re-emit reports.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 numerical
//! failure.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdiff::bench::{self, ReportFormat, SweepOptions};
use qdiff::config::ProblemConfig;
use qdiff::error::Error;
use qdiff::{assemble, hhl, march, spectra};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qdiff", about = "Space-time difference systems: assembly, spectra, solvers, sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Problem configuration (JSON; keys mirror the config fields)
    #[arg(long)]
    config: PathBuf,
    /// Output path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed for seeded components
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Order cap for the dense singular-value oracle
    #[arg(long, default_value_t = 4096)]
    dense_cap: usize,
    /// Override safety caps (explicit-march step count)
    #[arg(long, default_value_t = false)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

impl From<CliFormat> for ReportFormat {
    fn from(f: CliFormat) -> Self {
        match f {
            CliFormat::Csv => ReportFormat::Csv,
            CliFormat::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VaryParam {
    Epsilon,
    Nx,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the space-time system and export it in coordinate format
    Assemble {
        #[command(flatten)]
        common: CommonArgs,
        /// Also export the right-hand side (one value per line)
        #[arg(long)]
        rhs: Option<PathBuf>,
        /// Export the symmetric dilation instead of the system matrix
        #[arg(long, default_value_t = false)]
        dilation: bool,
    },
    /// Singular-value report (JSON)
    Spectra {
        #[command(flatten)]
        common: CommonArgs,
        /// Relative tolerance of the iterative path
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// March the scheme and export the trajectory as CSV
    Solve {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Statevector solve of the dilated system; reports fidelity and
    /// success probability
    Hhl {
        #[command(flatten)]
        common: CommonArgs,
        /// Clock-register qubits
        #[arg(long, default_value_t = 10)]
        clock_qubits: usize,
        /// Write the full statevector dump here
        #[arg(long)]
        state_dump: Option<PathBuf>,
    },
    /// Sweep a parameter and emit complexity records
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        vary: VaryParam,
        /// Comma-separated parameter values
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long, value_enum, default_value_t = CliFormat::Csv)]
        format: CliFormat,
    },
    /// Re-emit a JSON records file in the requested format
    Report {
        /// Input records (JSON array)
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = CliFormat::Csv)]
        format: CliFormat,
    },
}

fn run() -> qdiff::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Assemble { common, rhs, dilation } => {
            let cfg = ProblemConfig::from_json_file(&common.config)?;
            cfg.ensure_valid()?;
            let system = bench::assemble_system(&cfg)?;
            let header = format!(
                "scheme {} equation {} n_x {} n_t {} h {} tau {} epsilon {}",
                cfg.scheme.label(),
                cfg.equation.label(),
                cfg.n_x,
                cfg.n_t,
                cfg.h(),
                cfg.tau(),
                cfg.epsilon
            );
            let out = common
                .out
                .ok_or_else(|| Error::config("assemble needs --out".to_string()))?;
            if dilation {
                assemble::hermitian_dilation(&system.matrix).write_coordinate(&out, &header)?;
            } else {
                system.matrix.write_coordinate(&out, &header)?;
            }
            if let Some(rhs_path) = rhs {
                qdiff::sparse::write_vector(&rhs_path, &system.rhs)?;
            }
            println!(
                "assembled {} system: order {}, nnz {}, sparsity {}",
                cfg.scheme.label(),
                system.order(),
                system.matrix.nnz(),
                system.matrix.sparsity()
            );
            Ok(())
        }
        Command::Spectra { common, tol } => {
            let cfg = ProblemConfig::from_json_file(&common.config)?;
            cfg.ensure_valid()?;
            let system = bench::assemble_system(&cfg)?;
            let report = spectra::analyze_system(&system, Some(&cfg), common.dense_cap, tol)?;
            let text = serde_json::to_string_pretty(&report)?;
            match common.out {
                Some(path) => std::fs::write(path, text)?,
                None => println!("{text}"),
            }
            Ok(())
        }
        Command::Solve { common } => {
            let cfg = ProblemConfig::from_json_file(&common.config)?;
            cfg.ensure_valid()?;
            let initial = bench::default_initial(&cfg);
            let result = if cfg.scheme == qdiff::Scheme::ExplicitMultiscale {
                march::march_explicit_multiscale(&cfg, common.force)?
            } else {
                march::march_scheme(&cfg, &initial)?
            };
            if let Some(err) = result.final_error_inf {
                println!("final max error vs exact solution: {err:.6e}");
            }
            println!("counted operations: {}", result.ops.total());
            match common.out {
                Some(path) => result.write_csv(&path)?,
                None => print!("{}", result.to_csv()),
            }
            Ok(())
        }
        Command::Hhl { common, clock_qubits, state_dump } => {
            let cfg = ProblemConfig::from_json_file(&common.config)?;
            cfg.ensure_valid()?;
            let system = bench::assemble_system(&cfg)?;
            let sv = spectra::singular_values_dense_capped(&system.matrix, common.dense_cap)?;
            let params = hhl::choose_evolution_time(sv[0], clock_qubits)?;
            let dilation = assemble::hermitian_dilation(&system.matrix);
            let mut b = vec![0.0; dilation.n_rows()];
            b[..system.rhs.len()].copy_from_slice(&system.rhs);
            let mut run = hhl::hhl_solve(&dilation, &b, &params)?;

            let initial = bench::default_initial(&cfg);
            if let Ok(history) = march::march_scheme(&cfg, &initial) {
                run.decay_g = march::decay_factor_g(&history).ok();
            }
            println!(
                "fidelity {:.6}, success probability {:.6}, C {:.6e}, t0 {:.6e}, g {}",
                run.fidelity,
                run.success_probability,
                run.params.rotation_constant,
                run.params.t0,
                run.decay_g.map_or("n/a".to_string(), |g| format!("{g:.4}")),
            );
            if let Some(path) = state_dump {
                hhl::write_state_dump(&run.output_state, &run.params, &path)?;
            }
            if let Some(path) = common.out {
                let csv = hhl::state_csv_by_site(
                    &run.output_state,
                    system.block_size,
                    system.variable_scaling.as_ref(),
                );
                std::fs::write(path, csv)?;
            }
            Ok(())
        }
        Command::Sweep { common, vary, values, format } => {
            let cfg = ProblemConfig::from_json_file(&common.config)?;
            let opts = SweepOptions {
                dense_cap: common.dense_cap,
                force: common.force,
                ..SweepOptions::default()
            };
            let records = match vary {
                VaryParam::Epsilon => {
                    let eps: Vec<f64> = values
                        .iter()
                        .map(|s| s.parse::<f64>().map_err(|_| Error::config(format!("bad epsilon value: {s}"))))
                        .collect::<qdiff::Result<_>>()?;
                    bench::sweep_epsilon(&cfg, &eps, &opts)?
                }
                VaryParam::Nx => {
                    let res: Vec<usize> = values
                        .iter()
                        .map(|s| s.parse::<usize>().map_err(|_| Error::config(format!("bad resolution value: {s}"))))
                        .collect::<qdiff::Result<_>>()?;
                    bench::sweep_resolution(&cfg, &res, &opts)?
                }
            };
            let out = common
                .out
                .ok_or_else(|| Error::config("sweep needs --out".to_string()))?;
            bench::emit_report(&records, format.into(), &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
        Command::Report { input, out, format } => {
            let text = std::fs::read_to_string(&input)?;
            let records = bench::parse_json_report(&text)?;
            bench::emit_report(&records, format.into(), &out)?;
            println!("wrote {} records to {}", records.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
    }
}
