//! The `edistill` command-line pipeline: one subcommand per stage, each
//! reading and writing artifacts below a single output directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod workspace;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::commands::Command;
use crate::config::RunConfig;
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "edistill", version, about = "Distill teacher-labeled earnings-call topics and sentiment into small classifiers")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "run.toml")]
    pub config: PathBuf,
    /// Override the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.paths.out = out.clone();
        }
        Ok(config)
    }
}

/// Parse `args`, run the subcommand and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = cli.load_config().and_then(|config| cli.command.run(&config));
    match result {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(e) => {
            eprintln!("edistill {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}
