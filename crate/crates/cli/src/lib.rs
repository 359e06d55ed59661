//! Command-line front end: CSV ingestion, model files and the simulation
//! benchmark.

pub mod args;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod model_file;

use error::{CliError, CliResult};

pub fn run(cli: args::Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => config::FileConfig::load(path)?,
        None => config::FileConfig::default(),
    };
    match cli.threads.or(file.threads) {
        Some(threads) if threads > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?
            .install(|| commands::dispatch(&cli.command, &file)),
        _ => commands::dispatch(&cli.command, &file),
    }
}
