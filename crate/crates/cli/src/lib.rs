//! Command-line experiment runner for `funcspan`.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::RunOptions;
use crate::config::Experiment;
pub use crate::error::CliError;

/// Environment variable holding the log filter (e.g. `info`, `funcspan=debug`).
pub const LOG_ENV: &str = "FUNCSPAN_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "funcspan",
    version,
    about = "Ridge-network density experiments over concrete vector spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Experiment config (JSON, schema "funcspan.experiment/1").
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides the config's "output".
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Maximum worker threads for sweep cells (0 = all cores).
    #[arg(long, value_name = "N", default_value_t = 0)]
    pub jobs: usize,
    /// Seed override: replaces the config's seed list (or search seed).
    #[arg(long, value_name = "INT")]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one network and write fit.csv, summary.json and model.json.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Network width; defaults to the largest configured width.
        #[arg(long, value_name = "N")]
        width: Option<usize>,
    },
    /// Run the width × seed density sweep and write sweep.csv, summary.json, timings.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write every fitted network to models/.
        #[arg(long)]
        save_models: bool,
    },
    /// Scan the configured activation and write activation.json.
    ValidateActivation {
        #[command(flatten)]
        common: Common,
    },
    /// Search for a ridge witness of a nonzero pushforward; writes discriminate.csv.
    Discriminate {
        #[command(flatten)]
        common: Common,
    },
    /// Compare both sides of the change-of-variables identity; writes pushforward_check.json.
    PushforwardCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Polynomial least-squares baseline per degree; writes algebra_baseline.csv.
    AlgebraBaseline {
        #[command(flatten)]
        common: Common,
    },
    /// Check that the canonical functionals separate all net points; writes separation.json.
    SeparationCheck {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Fit { common, .. }
            | Command::Sweep { common, .. }
            | Command::ValidateActivation { common }
            | Command::Discriminate { common }
            | Command::PushforwardCheck { common }
            | Command::AlgebraBaseline { common }
            | Command::SeparationCheck { common } => common,
        }
    }
}

/// Runs one subcommand and returns the output directory.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let common = cli.command.common();
    let exp = Experiment::load(&common.config)?;
    let opts = RunOptions {
        out: common.out.clone(),
        jobs: common.jobs,
        seed: common.seed,
    };
    match &cli.command {
        Command::Fit { width, .. } => commands::fit(&exp, &opts, *width),
        Command::Sweep { save_models, .. } => commands::sweep(&exp, &opts, *save_models),
        Command::ValidateActivation { .. } => commands::validate_activation(&exp, &opts),
        Command::Discriminate { .. } => commands::discriminate_cmd(&exp, &opts),
        Command::PushforwardCheck { .. } => commands::pushforward_check(&exp, &opts),
        Command::AlgebraBaseline { .. } => commands::algebra_baseline(&exp, &opts),
        Command::SeparationCheck { .. } => commands::separation_check(&exp, &opts),
    }
}
