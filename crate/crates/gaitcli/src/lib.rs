//! Command-line frontend tying the gait crates together: dataset
//! construction, synthetic corpora, pretraining, fine-tuning, evaluation,
//! benchmarking, and gradient checking, all under one `gait` binary.
//!
//! Every run creates a fresh directory under the runs root (`./runs`, or
//! `$GAIT_RUNS_DIR`) holding the resolved configuration, per-epoch loss
//! log, and checkpoints. Usage and configuration mistakes exit with 1;
//! failures during a valid run exit with 2.

pub mod commands;
pub mod config;
pub mod error;
pub mod runs;
pub mod synth;

pub use commands::{dispatch, Cli, Command, EvalSummary};
pub use config::RunConfig;
pub use error::CliError;

use clap::error::ErrorKind;
use clap::Parser;
use std::process::ExitCode;

/// Binary entry point: parse, dispatch, and map errors to exit codes.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
