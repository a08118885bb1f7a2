//! The `ksjko` command set: config files, runs with persisted results,
//! validation suites and the threshold and distance calculators.
//!
//! Exit codes: 0 success, 1 failed validation, 2 invalid input, 3 threshold
//! violation, 4 solver failure, 5 blow-up sentinel.

pub mod config;
pub mod run;
pub mod tools;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::potentials::ThresholdReport;

pub use config::RunConfig;
pub use run::{cmd_run, RunManifest};
pub use validate::{run_suite, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    ValidationFailed = 1,
    InvalidInput = 2,
    ThresholdViolation = 3,
    SolverFailure = 4,
    Blowup = 5,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ksjko",
    version,
    about = "Splitting JKO solver for Keller-Segel with logistic source"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scheme from a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[output].dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a property suite over the built-in scenarios.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Worker threads; capped by KSJKO_THREADS.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print the admissibility thresholds.
    Thresholds(ThresholdCli),
    /// Print chi_star and which case applies.
    ChiStar {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        r: f64,
        #[arg(long = "rho0-linf")]
        rho0_linf: f64,
        #[arg(long)]
        json: bool,
    },
    /// Distances between two snapshot CSVs.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[arg(long = "metric", value_enum, default_values_t = [tools::Metric::W2, tools::Metric::Fr, tools::Metric::WfrUpper])]
        metrics: Vec<tools::Metric>,
        /// Regularization for `w2-entropic`.
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ThresholdCli {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long = "rho0-linf")]
    pub rho0_linf: f64,
    #[arg(long)]
    pub chi: f64,
    #[arg(long, default_value_t = 1.01)]
    pub lambda: f64,
    /// Defaults to `rho0-linf * omega`.
    #[arg(long = "rho0-l1")]
    pub rho0_l1: Option<f64>,
    /// Domain measure.
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long = "t-final", default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long)]
    pub json: bool,
}

impl ThresholdCli {
    fn args(&self) -> tools::ThresholdArgs {
        tools::ThresholdArgs {
            alpha: self.alpha,
            beta: self.beta,
            r: self.r,
            rho0_linf: self.rho0_linf,
            chi: self.chi,
            lambda: self.lambda,
            rho0_l1: self.rho0_l1,
            omega: self.omega,
            dim: self.dim,
            t_final: self.t_final,
        }
    }
}

/// Worker count: `--jobs` or the available parallelism, capped by
/// `KSJKO_THREADS` when set.
pub fn worker_threads(jobs: Option<usize>) -> usize {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = jobs.unwrap_or(default).max(1);
    match std::env::var("KSJKO_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => n.min(cap),
        _ => n,
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli, out, err),
        Err(e) => {
            let _ = write!(err, "{e}");
            if e.use_stderr() {
                ExitStatus::InvalidInput
            } else {
                ExitStatus::Success
            }
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match cli.command {
        Command::Run { config, out: dir } => match cmd_run(&config, dir.as_deref()) {
            Ok(o) => {
                let m = &o.manifest;
                let _ = writeln!(
                    out,
                    "{:?}: {} steps, tau = {}, outputs in {}",
                    m.status,
                    m.steps_completed,
                    m.tau,
                    o.out_dir.display()
                );
                if let Some(msg) = &m.message {
                    let _ = writeln!(err, "{msg}");
                }
                m.status.exit()
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                match e {
                    Error::Io(_) => ExitStatus::SolverFailure,
                    _ => ExitStatus::InvalidInput,
                }
            }
        },
        Command::Validate { suite, jobs } => match run_suite(suite, worker_threads(jobs)) {
            Ok(report) => {
                let _ = write!(out, "{}", report.table());
                let failed: Vec<_> = report.failures().collect();
                if failed.is_empty() {
                    let _ = writeln!(out, "all {} checks passed", report.rows.len());
                    ExitStatus::Success
                } else {
                    for r in &failed {
                        let _ = writeln!(err, "FAILED {} / {}: margin {:e}", r.scenario, r.check, r.margin);
                    }
                    ExitStatus::ValidationFailed
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                ExitStatus::ValidationFailed
            }
        },
        Command::Thresholds(t) => {
            let args = t.args();
            let inputs = match args.inputs() {
                Ok(i) => i,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return ExitStatus::InvalidInput;
                }
            };
            match ThresholdReport::compute(inputs) {
                Ok(rep) => {
                    let text = if t.json {
                        tools::report_json(&rep)
                    } else {
                        tools::report_table(&rep)
                    };
                    let _ = writeln!(out, "{}", text.trim_end());
                    ExitStatus::Success
                }
                Err(e) => {
                    if let Ok(cs) = tools::chi_star_output(&args) {
                        let _ = writeln!(out, "chi_star = {} ({})", cs.chi_star, cs.case);
                    }
                    let _ = writeln!(err, "error: {e}");
                    match e {
                        Error::InvalidParameter { .. } => ExitStatus::InvalidInput,
                        _ => ExitStatus::ThresholdViolation,
                    }
                }
            }
        }
        Command::ChiStar {
            alpha,
            beta,
            r,
            rho0_linf,
            json,
        } => {
            let args = tools::ThresholdArgs {
                alpha,
                beta,
                r,
                rho0_linf,
                chi: 0.0,
                lambda: 1.01,
                rho0_l1: None,
                omega: 1.0,
                dim: 1,
                t_final: 1.0,
            };
            match tools::chi_star_output(&args) {
                Ok(cs) => {
                    if json {
                        let _ = writeln!(out, "{}", serde_json::to_string(&cs).expect("serializes"));
                    } else {
                        let _ = writeln!(out, "chi_star = {} ({})", cs.chi_star, cs.case);
                    }
                    ExitStatus::Success
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    ExitStatus::InvalidInput
                }
            }
        }
        Command::Dist {
            a,
            b,
            metrics,
            eps,
            json,
        } => match tools::dist(&a, &b, &metrics, eps) {
            Ok(rows) => {
                if json {
                    let _ = writeln!(out, "{}", serde_json::to_string(&rows).expect("serializes"));
                } else {
                    for r in rows {
                        let _ = writeln!(out, "{:<12} {:.12e}", r.metric, r.value);
                    }
                }
                ExitStatus::Success
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                ExitStatus::InvalidInput
            }
        },
    }
}
