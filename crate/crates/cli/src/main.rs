//! `schpack` — scenario runner for the wave-packet toolkit.
//!
//! Every command reads one TOML scenario file (`--config`), computes through
//! the core library, and writes CSV/JSON artifacts into the output directory
//! (`--out`, or `output.dir` from the config, or `./out`). All operation is
//! deterministic: identical configs produce bit-identical outputs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime/numeric failure,
//! 4 verification failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Scenario, ScenarioConfig, VariantSpec};

/// Errors carrying their process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or command line (exit 2).
    Config(String),
    /// A computation or I/O failure at run time (exit 3).
    Runtime(String),
    /// One or more asserted verification checks failed (exit 4).
    Verification,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn runtime(msg: impl ToString) -> Self {
        CliError::Runtime(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Verification => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
            CliError::Verification => write!(f, "verification failed (see verify.json)"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "schpack",
    version,
    about = "Gaussian wave-packet dynamics under logarithmic friction: \
             trajectories, packets, kernels, grid-solver comparisons, verification",
    after_help = "Exit codes: 0 success, 2 config error, 3 runtime failure, 4 verification failure."
)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir from the config; default ./out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Mean-action convention (overrides the config).
    #[arg(long, global = true, value_enum)]
    variant: Option<VariantSpec>,

    /// Accepted for workflow compatibility; every command is already
    /// deterministic (no randomness anywhere), so this changes nothing.
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the packet moment equations; write t,q,qdot,a,adot,S0.
    Trajectory,
    /// Evaluate the closed-form packet and its Madelung fields per time.
    Packet,
    /// Build the velocity-integral kernel matrix with quadrature metadata.
    Kernel,
    /// Apply the kernel to the initial packet; compare to the closed form.
    Propagate,
    /// Evolve the full nonlinear equation; tabulate moments vs the ODEs.
    Oracle,
    /// Run the named consistency checks; write a JSON report.
    Verify,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config PATH is required"))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let parsed = ScenarioConfig::from_toml(&text)?;
    let scenario = Scenario::build(&parsed, cli.variant, cli.out.as_ref())?;

    // Record the exact scenario this run used (command-line variant override
    // folded in), so an output directory is always self-describing.
    let mut echo = parsed.clone();
    echo.variant = Some(scenario.variant);
    output::write_atomic(&scenario.out_dir, "config_used.toml", &echo.to_toml()?)?;

    match cli.command {
        Command::Trajectory => commands::trajectory::run(&scenario),
        Command::Packet => commands::packet::run(&scenario),
        Command::Kernel => commands::kernel::run(&scenario),
        Command::Propagate => commands::propagate::run(&scenario),
        Command::Oracle => commands::oracle::run(&scenario),
        Command::Verify => commands::verify::run(&scenario),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
