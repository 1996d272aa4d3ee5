//! Command-line front end for the neutron interferometer simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 physics precondition
//! failure (the offending element is named on stderr).

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "nisim",
    about = "Polarized-neutron interferometer simulator with rf spin flippers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output table path (overrides [output].path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed (overrides [noise].seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Enable Poisson counting noise.
    #[arg(long)]
    noise: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Interference scan of the O and H detectors with a fringe fit.
    Scan(CommonArgs),
    /// Relative-phase slope experiments against both rf phases.
    Slopes(CommonArgs),
    /// Time-resolved O-beam polarization over one rf period.
    Timeresolved(CommonArgs),
    /// Quantized-field cross-validation of the flipper model.
    ValidateJc(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Scan(a)
            | Command::Slopes(a)
            | Command::Timeresolved(a)
            | Command::ValidateJc(a) => a,
        }
    }

    fn default_output(&self) -> &'static str {
        match self {
            Command::Scan(_) => "scan.csv",
            Command::Slopes(_) => "slopes.csv",
            Command::Timeresolved(_) => "timeresolved.csv",
            Command::ValidateJc(_) => "validate_jc.csv",
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(CliError::Config)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.noise.seed = seed;
    }
    if args.noise {
        config.noise.enabled = true;
    }
    Ok(config)
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let config = load_config(args)?;
    let out: PathBuf = args
        .out
        .clone()
        .or_else(|| config.output.path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| Path::new(command.default_output()).to_path_buf());
    match command {
        Command::Scan(_) => commands::cmd_scan(&config, &out),
        Command::Slopes(_) => commands::cmd_slopes(&config, &out),
        Command::Timeresolved(_) => commands::cmd_timeresolved(&config, &out),
        Command::ValidateJc(_) => commands::cmd_validate_jc(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("configuration error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Physics(message)) => {
            eprintln!("physics error: {message}");
            ExitCode::from(3)
        }
        Err(CliError::Io(message)) => {
            eprintln!("io error: {message}");
            ExitCode::from(1)
        }
    }
}
