mod cli;
mod commands;
mod errors;
mod settings;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::cli::{Cli, Command};
use crate::errors::CliError;

fn main() -> ExitCode {
    let parsed = match Cli::try_parse() {
        Ok(parsed) => parsed,
        Err(e) => {
            // --help and --version are not failures; anything else is a
            // usage error.
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(parsed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(parsed: Cli) -> Result<(), CliError> {
    let config = parsed.config.as_deref();
    match &parsed.command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Extract(args) => block_on(commands::extract(config, args)),
        Command::Evaluate(args) => commands::evaluate(config, args),
        Command::Ablate(args) => block_on(commands::ablate(config, args)),
        Command::Bins(args) => commands::bins(config, args),
        Command::Stats(args) => commands::stats(config, args),
    }
}

fn block_on<F: std::future::Future<Output = Result<(), CliError>>>(
    fut: F,
) -> Result<(), CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start async runtime: {e}")))?
        .block_on(fut)
}
