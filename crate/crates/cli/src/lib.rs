//! Command line surface of annofix and the HTTP review service.
//!
//! Datasets use the layout `<root>/<video_id>/frames/*.pgm` plus
//! `<root>/<video_id>/label.json`; corrected annotation sets mirror the tree.

pub mod cli;
pub mod commands;
pub mod dataset;
pub mod decisions;
pub mod render;
pub mod review;

use std::fmt;
use std::process::ExitCode;

use cli::{Cli, Command, ReviewCommand};

/// Bad flags or configuration. Reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub(crate) fn usage(msg: impl fmt::Display) -> anyhow::Error {
    UsageError(msg.to_string()).into()
}

/// Runs one command. Exit codes: 0 success, 1 when some videos or frames
/// failed (or on a runtime error), 2 on a usage or configuration error.
pub fn run(cli: Cli) -> ExitCode {
    let result = match &cli.command {
        Command::Stats(a) => commands::stats(a),
        Command::Inject(a) => commands::inject(a),
        Command::Evaluate(a) => commands::evaluate(a).map(|()| 0),
        Command::Correct(a) => commands::correct(a),
        Command::Render(a) => render::render(a),
        Command::Review(ReviewCommand::Serve(a)) => review::serve_blocking(a).map(|()| 0),
        Command::Review(ReviewCommand::Export(a)) => commands::export(a),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("{failed} item(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
