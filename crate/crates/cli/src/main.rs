//! `sybilproof`: run diffusion auctions, inspect the Sybil structure of a
//! market, search for attacks, and run the Price's-model experiments.
//!
//! Results go to stdout (or `--output`) as JSON or CSV. Logs and the human
//! readable verdict table go to stderr, so stdout can be piped.
//!
//! ```bash
//! sybilproof run --mechanism stm --input fixtures/theta1.json
//! sybilproof attack --mechanism vcg --input fixtures/f3.json --attacker a
//! sybilproof experiment --n 100 --m 3 --trials 1000 --seed 7 --out results.csv --summary summary.csv
//! ```

mod args;
mod commands;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Exit status for results that contradict an expected verdict.
const EXIT_VIOLATION: u8 = 1;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => commands::run(&cli, a),
        Command::Gamma => commands::gamma(&cli),
        Command::Attack(a) => commands::attack(&cli, a),
        Command::Experiment(a) => commands::experiment(&cli, a),
        Command::Verify(a) => verify::verify(&cli, a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
