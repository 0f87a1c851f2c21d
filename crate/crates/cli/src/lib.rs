//! Experiment driver: parses experiment files, runs one subcommand, and
//! renders JSON reports or CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{Output, Overrides, Verdict};
pub use config::{CheckKind, ExperimentConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "spdelab",
    version,
    about = "Monte Carlo checks of SPDE semigroup bounds"
)]
pub struct Cli {
    /// Override the experiment seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the regularity profile and report assumption verdicts.
    Validate { config: PathBuf },
    /// Gradient, log-Harnack and Poincaré constants over a time grid.
    Constants { config: PathBuf },
    /// Run one statistical check.
    Check {
        #[arg(value_enum)]
        which: CheckKind,
        config: PathBuf,
    },
    /// Galerkin truncation error table.
    Converge { config: PathBuf },
    /// Second-moment harness with plateau verdict.
    Invariant { config: PathBuf },
    /// Coefficient trajectories as CSV.
    DumpTrajectories { config: PathBuf },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::Validate { config }
            | Command::Constants { config }
            | Command::Check { config, .. }
            | Command::Converge { config }
            | Command::Invariant { config }
            | Command::DumpTrajectories { config } => config,
        }
    }
}

/// Runs the parsed command.
pub fn run(cli: &Cli) -> CliResult<Output> {
    let path = cli.command.config();
    let (cfg, model) = ExperimentConfig::load(path)?;
    let ov = Overrides {
        seed: cli.seed,
        threads: cli.threads,
    };
    let base = path.parent().unwrap_or(Path::new("."));
    match &cli.command {
        Command::Validate { .. } => commands::validate(&cfg, &model),
        Command::Constants { .. } => commands::constants(&cfg, &model),
        Command::Check { which, .. } => commands::check(&cfg, &model, *which, ov),
        Command::Converge { .. } => commands::converge(&cfg, &model, ov),
        Command::Invariant { .. } => commands::invariant(&cfg, &model, ov),
        Command::DumpTrajectories { .. } => commands::dump_trajectories(&cfg, &model, ov, base),
    }
}

/// Exit status: 0 pass, 1 statistical failure, 2 configuration or
/// assumption error, 3 numerical failure.
pub fn exit_code(result: &CliResult<Output>) -> i32 {
    match result {
        Ok(out) => match out.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Assumption(_) => 2,
        },
        Err(e) => e.exit_code(),
    }
}
