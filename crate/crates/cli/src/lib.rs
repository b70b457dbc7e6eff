//! Batch runner for glauber: reads a TOML run configuration and executes the
//! `simulate`, `sample`, `verify`, `oracle-compare` and `gap` subcommands.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 bad input, 3 internal or
//! estimation error.

pub mod config;
pub mod error;
pub mod gap;
pub mod oracle;
pub mod output;
pub mod sample;
pub mod simulate;
pub mod verify;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use glauber::Execution;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "glauber", version, about = "Simulate and verify continuum Glauber dynamics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; all available cores by default.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Overrides `output.directory`.
    #[arg(long, global = true, value_name = "DIR", env = "GLAUBER_OUT_DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Run chains over `run.horizon` and write trajectories and snapshots.
    Simulate,
    /// Draw spaced equilibrium samples.
    Sample,
    /// Run the selected equilibrium checks and write a verification report.
    Verify,
    /// Compare with the exact lattice model.
    OracleCompare,
    /// Fit decay rates of the observable battery against `1 - delta`.
    Gap,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Input("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let cfg = load(cli)?;
    let exec = Execution::Parallel;
    let pass_code = |pass: bool| if pass { 0 } else { 1 };
    Ok(match cli.command {
        Command::Simulate => {
            simulate::run(&cfg, exec)?;
            0
        }
        Command::Sample => {
            sample::run(&cfg, exec)?;
            0
        }
        Command::Verify => match verify::run(&cfg, exec)? {
            verify::Outcome::Pass => 0,
            verify::Outcome::Fail => 1,
            verify::Outcome::Error => 3,
        },
        Command::OracleCompare => pass_code(oracle::run(&cfg, exec)?),
        Command::Gap => pass_code(gap::run(&cfg, exec)?),
    })
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let threads = cli.threads.unwrap_or(0);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return 3;
        }
    };
    match pool.install(|| execute(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
