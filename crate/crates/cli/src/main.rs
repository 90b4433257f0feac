//! `banditwin` binary: simulate scenarios, sweep thresholds, and report on
//! emitted metrics.  Exit codes: 0 success, 2 configuration error, 3
//! runtime error; failures print one machine-parseable line to stderr.

use clap::Parser;

use banditwin::Error;

mod cli;
mod commands;
mod config;
mod output;

use cli::{Cli, Command};
use config::RunConfig;

fn run(args: Cli) -> banditwin::Result<()> {
    match args.command {
        Command::Simulate(opts) => commands::cmd_simulate(RunConfig::resolve(&opts)?),
        Command::Sweep(opts) => commands::cmd_sweep(RunConfig::resolve(&opts)?),
        Command::Report(opts) => commands::cmd_report(&opts),
    }
}

fn main() {
    let args = Cli::parse();
    match run(args) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 2,
                Error::Contract(_) | Error::InsufficientData(_) => 3,
            };
            std::process::exit(code);
        }
    }
}
