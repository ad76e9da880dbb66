//! `wfs`: keyframe selection over relevance traces.
//!
//! Exit codes: 0 success, 1 invalid flags or input content, 2 file system errors.

mod args;
mod commands;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are reported on standard error.
pub fn run_cli<I, S>(argv: I) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };

    let result = match &cli.command {
        Command::Select(a) => commands::select(a),
        Command::Inspect(a) => commands::inspect(a).map(|text| print!("{text}")),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit_code()
        }
    }
}
