//! Batch front-end for the mean field game solver and its diagnostics.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mfgfb", version, about = "Lagrangian MFG solver with free-boundary diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Problem config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory; created if absent.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Mesh override `NxM` (nodes in y or x, then in t).
    #[arg(long, global = true, value_parser = parse_mesh)]
    pub mesh: Option<(usize, usize)>,

    /// Continuation levels for `solve`/`report`, refinement levels for `transforms`/`convergence`.
    #[arg(long, global = true)]
    pub levels: Option<usize>,

    /// Overwrite a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,

    /// Seed for the randomized initial-guess perturbation of `solve`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the closed-form self-similar solution.
    Oracle {
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
        /// Profile height; unit mass when omitted.
        #[arg(long = "R")]
        big_r: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        t0: f64,
        #[arg(long, default_value_t = 2.0)]
        t1: f64,
    },
    /// Solve the Lagrangian flow equation.
    Solve,
    /// Radial chart and weak residuals of the transformed variable.
    Transforms,
    /// Free-boundary curves, identity residuals and rate fits.
    Report,
    /// Errors against the self-similar solution under refinement.
    Convergence,
    /// Check the initial-data hypotheses.
    Validate,
}

fn parse_mesh(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("mesh `{s}` is not of the form NxM"))?;
    let n = a.trim().parse().map_err(|_| format!("bad node count `{a}`"))?;
    let m = b.trim().parse().map_err(|_| format!("bad node count `{b}`"))?;
    Ok((n, m))
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input or failed hypothesis check; exit 2.
    Invalid(String),
    /// Newton failure; exit 3.
    NonConvergence(String),
    /// Filesystem trouble; exit 4.
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::NonConvergence(m) | CliError::Io(m) => m,
        }
    }
}

impl From<mfgfb::Error> for CliError {
    fn from(e: mfgfb::Error) -> Self {
        if e.is_solver_failure() {
            CliError::NonConvergence(e.to_string())
        } else {
            CliError::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MFGFB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("MFGFB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mfgfb: error: {}", e.message().replace('\n', " "));
            ExitCode::from(e.code())
        }
    }
}
