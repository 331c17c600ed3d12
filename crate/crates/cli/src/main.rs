//! `qrel`: reliability curves, fault-tolerance phase scans and lifetime
//! records for flip-code quantum storage, plus a structure-function DSL
//! front end. Every subcommand writes deterministic CSV: identical flags
//! give byte-identical output.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable inputs, malformed grids or DSL syntax: exit 2.
    Usage(String),
    /// Numeric or invariant failure during computation: exit 1.
    Numeric(String),
}

impl From<qrel_core::Error> for CliError {
    fn from(e: qrel_core::Error) -> CliError {
        use qrel_core::Error::*;
        match e {
            Syntax { .. } | MatrixFormat(_) | Io(_) | UnknownComponent(_)
            | UnboundComponent(_) => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qrel",
    version,
    about = "Quantum reliability of flip-code storage: curves, phases, lifetime records"
)]
struct Cli {
    /// Write the primary CSV here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress status lines
    #[arg(long, global = true)]
    quiet: bool,

    /// Optional `key = value` defaults file; explicit flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Spontaneous emission coefficient; rescales only the printed time
    /// columns (all internal time is in 1/gamma0 units)
    #[arg(long, global = true)]
    gamma0: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single physical bit: iterated-projection reliability vs the
    /// closed-form exponential
    Physical(commands::physical::Args),
    /// Logical flip-code bit: closed form, rate-equation route, full
    /// 8-dimensional run and the classical comparison curve
    Logical(commands::logical::Args),
    /// FT/NFT classification over an (alpha, N) grid
    Phase(commands::phase::Args),
    /// Apparatus lifetime record: matrix export, mean lifetime, hazard
    /// and entropy gap
    Apparatus(commands::apparatus::Args),
    /// Compile a structure-function DSL file and run it, or check the
    /// consistency of a survival/failure family
    Trajectory(commands::trajectory::Args),
}

/// Shared command context resolved from global flags.
pub struct Ctx {
    pub out: Option<PathBuf>,
    pub quiet: bool,
    pub config: ConfigFile,
    pub gamma0: f64,
}

impl Ctx {
    pub fn csv_on_stdout(&self) -> bool {
        self.out.is_none()
    }
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let config = ConfigFile::load(cli.config.as_deref())?;
    let gamma0 =
        config::resolve_f64(cli.gamma0, config.get_f64("gamma0"), 1.0)?;
    if gamma0 <= 0.0 || !gamma0.is_finite() {
        return Err(CliError::Usage(format!("--gamma0 {} must be positive", gamma0)));
    }
    let ctx = Ctx { out: cli.out, quiet: cli.quiet, config, gamma0 };
    match cli.command {
        Command::Physical(args) => commands::physical::run(&args, &ctx),
        Command::Logical(args) => commands::logical::run(&args, &ctx),
        Command::Phase(args) => commands::phase::run(&args, &ctx),
        Command::Apparatus(args) => commands::apparatus::run(&args, &ctx),
        Command::Trajectory(args) => commands::trajectory::run(&args, &ctx),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Numeric(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {}", msg);
            ExitCode::from(2)
        }
    }
}
