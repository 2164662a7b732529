//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 configuration or I/O error.

pub mod commands;
pub mod config;
pub mod validate;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_angles, cmd_pmf, cmd_power, cmd_toa_sweep, Overrides};
pub use config::{ConfigError, RawConfig, RunConfig};
pub use validate::{validate, ValidationReport};

#[derive(Debug, Parser)]
#[command(
    name = "dualvr",
    version,
    about = "Dual visibility-region channel model: statistics and Monte Carlo runs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MPC count PMF, analytic and simulated
    Pmf(CommonArgs),
    /// Mean ToA over the configured d' and gamma grids
    ToaSweep(CommonArgs),
    /// Mean NLoS received power over the configured d' grid
    Power(CommonArgs),
    /// AoD/AoA histograms
    Angles(CommonArgs),
    /// Run the self-check suite
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON config; the built-in GTU preset when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted (and not set in the config)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(String),
    #[error("model error: {0}")]
    Model(#[from] crate::Error),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Model(crate::Error::InvalidArgument { .. }) => 2,
            CliError::Model(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::gtu()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
            Ok(RunConfig::from_json(&text)?)
        }
    }
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Executes one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let (args, name) = match &cli.command {
        Command::Pmf(a) => (a, "pmf"),
        Command::ToaSweep(a) => (a, "toa-sweep"),
        Command::Power(a) => (a, "power"),
        Command::Angles(a) => (a, "angles"),
        Command::Validate(a) => (a, "validate"),
    };
    let cfg = load_config(args.config.as_deref())?;
    let overrides = Overrides {
        seed: args.seed,
        realizations: args.realizations,
        workers: args.workers,
    };
    if overrides.realizations == Some(0) {
        return Err(ConfigError("--realizations: must be >= 1".into()).into());
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone().map(PathBuf::from));
    let text = match name {
        "pmf" => cmd_pmf(&cfg, &overrides)?,
        "toa-sweep" => cmd_toa_sweep(&cfg, &overrides)?,
        "power" => cmd_power(&cfg, &overrides)?,
        "angles" => cmd_angles(&cfg, &overrides)?,
        _ => {
            let report = validate(&cfg, &overrides)?;
            let text = report.to_string();
            emit(&text, out)?;
            if !report.passed() {
                let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
                return Err(CliError::Validation(names.join(", ")));
            }
            return Ok(());
        }
    };
    emit(&text, out)
}
