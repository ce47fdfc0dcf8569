use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eitsdp::config::{ExperimentConfig, Overrides};
use eitsdp::error::AppError;
use eitsdp::experiments::{self, SolveOutcome};
use eitsdp_core::Backend;
use serde::Serialize;

/// Convex reconstruction of layered conductivities: experiments and artifacts.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// JSON configuration; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Number of measured modes.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Noise level, also used as the constraint slack.
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Penalty,
    Barrier,
}

#[derive(Subcommand)]
enum Command {
    /// Least-squares residual over the grid of the two free layers.
    Landscape,
    /// Least-squares runs from every grid initialization.
    Basins,
    /// Compute and verify a certificate (cost vector and stability constant).
    Calibrate,
    /// Solve the convex program, once or over seeded noise trials.
    Solve {
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Measurement matrix CSV instead of exact data.
        #[arg(long)]
        measurement: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Draw each trial's truth from the calibration samples.
        #[arg(long)]
        truth_from_samples: bool,
    },
    /// Randomized monotonicity and convexity suites.
    Properties {
        #[arg(long)]
        trials: Option<usize>,
        /// Negate every Jacobian (fault injection).
        #[arg(long, hide = true)]
        flip_jacobian_sign: bool,
    },
}

fn print<T: Serialize>(value: &T) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(value)?;
    // a closed pipe is not an error for the experiment itself
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<u8, AppError> {
    let overrides = Overrides {
        m: cli.m,
        delta: cli.delta,
        seed: cli.seed,
        out: cli.out,
    };
    let mut cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Landscape => {
            print(&experiments::landscape(&cfg)?)?;
            Ok(0)
        }
        Command::Basins => {
            print(&experiments::basins(&cfg)?)?;
            Ok(0)
        }
        Command::Calibrate => {
            let (_, summary) = experiments::calibrate(&cfg)?;
            print(&summary)?;
            Ok(if summary.passed() { 0 } else { 2 })
        }
        Command::Solve {
            certificate,
            measurement,
            trials,
            backend,
            truth_from_samples,
        } => {
            if certificate.is_some() {
                cfg.solve.certificate = certificate;
            }
            if measurement.is_some() {
                cfg.solve.measurement = measurement;
            }
            if let Some(t) = trials {
                cfg.solve.trials = t;
            }
            if let Some(b) = backend {
                cfg.solve.backend = match b {
                    BackendArg::Penalty => Backend::Penalty,
                    BackendArg::Barrier => Backend::Barrier,
                };
            }
            cfg.solve.truth_from_samples |= truth_from_samples;
            if cfg.solve.certificate.is_none() {
                eprintln!("warning: no certificate given, using uniform cost");
            }
            match experiments::solve(&cfg)? {
                SolveOutcome::Single(s) => {
                    print(&s)?;
                    Ok(0)
                }
                SolveOutcome::Trials(s) => {
                    print(&s)?;
                    Ok(if s.violations == 0 { 0 } else { 3 })
                }
            }
        }
        Command::Properties {
            trials,
            flip_jacobian_sign,
        } => {
            if let Some(t) = trials {
                cfg.property_trials = t;
            }
            let rows = experiments::properties(&cfg, flip_jacobian_sign)?;
            print(&rows)?;
            Ok(if rows.iter().all(|r| r.violations == 0) { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
