//! `dpselect`: batch front end for private selection, exact distributions,
//! equivalence comparisons, privacy audits and utility reports.
//!
//! Exit codes: 0 success or check passed, 2 invalid input, 3 check failed.

mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use commands::{Cli, CliError, Outcome};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(3),
        Err(CliError::Invalid(msg)) => {
            eprintln!("invalid input: {msg}");
            ExitCode::from(2)
        }
    }
}
