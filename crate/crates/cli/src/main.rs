//! `logconcave`: command-line access to log-concave density fits and
//! log-concave mixture clustering.
//!
//! Exit codes: 0 success, 2 bad input or usage, 3 the solver did not
//! converge (the fit is still written), 4 every EM restart degenerated.

mod artifact;
mod commands;
mod error;
mod number;
mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use logconcave::{EmConfig, SolverConfig};

use commands::{Format, Mode, Output, Quantity};
use error::CliError;
use table::read_input;

#[derive(Debug, Parser)]
#[command(name = "logconcave", version, about = "Log-concave density estimation and clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a log-concave density to a single column of numbers.
    Fit {
        /// CSV file with one numeric column, or `-` for standard input.
        input: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Evaluate a fitted density on an equally spaced grid over its support.
    Eval {
        /// Fit artifact written by `fit`.
        artifact: PathBuf,
        /// Number of grid points.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Quantity to evaluate.
        #[arg(long, value_enum, default_value_t = Quantity::Pdf)]
        what: Quantity,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw random values from a fitted density.
    Sample {
        /// Fit artifact written by `fit`.
        artifact: PathBuf,
        /// Number of draws.
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Cluster observations with an EM mixture model.
    Cluster {
        /// CSV file with one column (univariate, gaussian) or several (copula).
        input: PathBuf,
        /// Number of components.
        #[arg(long, allow_negative_numbers = true)]
        k: i64,
        /// Component model.
        #[arg(long, value_enum, default_value_t = Mode::Univariate)]
        mode: Mode,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        em: EmArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format; `fit` and `cluster` default to JSON, the others to CSV.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Iteration cap of the density solver (default 500).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative objective change required to stop (default 1e-10).
    #[arg(long)]
    tol_objective: Option<f64>,
    /// Projected-gradient residual required to stop (default 1e-8).
    #[arg(long)]
    tol_stationarity: Option<f64>,
    /// Sufficient-increase constant of the line search (default 1e-4).
    #[arg(long)]
    armijo_c: Option<f64>,
    /// Step shrink factor of the line search (default 0.5).
    #[arg(long)]
    backtrack_factor: Option<f64>,
    /// Use convex-minorant steps only.
    #[arg(long)]
    no_newton: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            tol_objective: self.tol_objective.unwrap_or(d.tol_objective),
            tol_stationarity: self.tol_stationarity.unwrap_or(d.tol_stationarity),
            armijo_c: self.armijo_c.unwrap_or(d.armijo_c),
            backtrack_factor: self.backtrack_factor.unwrap_or(d.backtrack_factor),
            newton: !self.no_newton,
        }
    }
}

#[derive(Debug, Args)]
struct EmArgs {
    /// EM iteration cap per restart (default 200).
    #[arg(long)]
    max_em_iter: Option<usize>,
    /// Relative log-likelihood change that ends EM (default 1e-8).
    #[arg(long)]
    tol_loglik: Option<f64>,
    /// Number of random restarts; the best log-likelihood wins (default 5).
    #[arg(long)]
    restarts: Option<usize>,
    /// Mixing weight below which a component counts as degenerate (default 2/n).
    #[arg(long)]
    min_component_weight: Option<f64>,
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let (output, out) = match cli.command {
        Command::Fit { input, out, solver } => {
            let bytes = read_input(&input)?;
            (commands::fit(&bytes, &solver.config(), out.format.unwrap_or(Format::Json))?, out)
        }
        Command::Eval { artifact, grid, what, out } => {
            let bytes = read_input(&artifact)?;
            (commands::eval(&bytes, grid, what, out.format.unwrap_or(Format::Csv))?, out)
        }
        Command::Sample { artifact, m, seed, out } => {
            let bytes = read_input(&artifact)?;
            (commands::sample(&bytes, m, seed, out.format.unwrap_or(Format::Csv))?, out)
        }
        Command::Cluster { input, k, mode, seed, em, solver, out } => {
            let k = usize::try_from(k)
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| CliError::Input(format!("number of components must be at least 1, got {k}")))?;
            let d = EmConfig::default();
            let config = EmConfig {
                max_em_iter: em.max_em_iter.unwrap_or(d.max_em_iter),
                tol_loglik: em.tol_loglik.unwrap_or(d.tol_loglik),
                restarts: em.restarts.unwrap_or(d.restarts),
                min_component_weight: em.min_component_weight,
                seed,
                solver: solver.config(),
            };
            let bytes = read_input(&input)?;
            (commands::cluster(&bytes, k, mode, &config, out.format.unwrap_or(Format::Json))?, out)
        }
    };
    write_output(out.output.as_deref(), &output.bytes)?;
    Ok(output)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests print and succeed; usage errors exit 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(Output { warning: None, .. }) => ExitCode::SUCCESS,
        Ok(Output { warning: Some(w), .. }) | Err(w) => {
            eprintln!("logconcave: {w}");
            ExitCode::from(w.exit_code())
        }
    }
}
