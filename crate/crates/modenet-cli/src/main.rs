//! `modenet` command line: frequency sweeps, noise spectra, design reports
//! and invariant checks for coupled mode networks, driven by a TOML
//! configuration.
//!
//! Exit codes: 0 success, 1 failed invariant check, 2 configuration or IO
//! error, 3 numeric failure, 4 infeasible design.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigDocument;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
    Infeasible(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            CliError::Infeasible(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<modenet::Error> for CliError {
    fn from(e: modenet::Error) -> Self {
        use modenet::Error::*;
        match &e {
            SingularMatrix { .. } | OracleFailure { .. } | DegenerateDenominator { .. } => {
                CliError::Numeric(e.to_string())
            }
            DesignInfeasible(_) | NoFiniteSolution(_) => CliError::Infeasible(e.to_string()),
            InvalidParameter(_) | NotFound(_) | Certification { .. } => {
                CliError::Config(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "modenet",
    version,
    about = "Scattering, noise and design tooling for coupled cavity-mechanical mode networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides [output].path (reports default to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the external scattering matrix over frequency and write CSV
    Sweep(RunArgs),
    /// Compute symmetrized output noise spectra and write CSV
    Noise(RunArgs),
    /// Solve an isolator or circulator operating point and print a report
    Design(RunArgs),
    /// Run the invariant suite on the configured network
    Check(RunArgs),
}

fn load(path: &Path) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    ConfigDocument::parse(&text)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// CSV commands must name a destination; reports fall back to stdout.
fn resolve_out(args: &RunArgs, config: &ConfigDocument) -> Option<PathBuf> {
    args.out
        .clone()
        .or_else(|| config.output_path().map(PathBuf::from))
}

fn write_csv(args: &RunArgs, config: &ConfigDocument, csv: &str) -> Result<(), CliError> {
    let path = resolve_out(args, config).ok_or_else(|| {
        CliError::Config("no output path: pass --out or set [output].path".into())
    })?;
    write_file(&path, csv)
}

fn write_report(args: &RunArgs, config: &ConfigDocument, report: &str) -> Result<(), CliError> {
    match resolve_out(args, config) {
        Some(path) => write_file(&path, report),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Sweep(args) => {
            let config = load(&args.config)?;
            write_csv(args, &config, &commands::cmd_sweep(&config)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Noise(args) => {
            let config = load(&args.config)?;
            write_csv(args, &config, &commands::cmd_noise(&config)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Design(args) => {
            let config = load(&args.config)?;
            write_report(args, &config, &commands::cmd_design(&config)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check(args) => {
            let config = load(&args.config)?;
            let (report, ok) = commands::cmd_check(&config)?;
            write_report(args, &config, &report)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
