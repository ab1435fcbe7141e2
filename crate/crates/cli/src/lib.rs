//! Library side of the `adx-lab` command-line tool: argument micro-syntax,
//! sweep commands and CSV/JSON encodings.

pub mod args;
pub mod commands;
pub mod output;

use adx_core::AdxError;

pub use args::{parse_psd, parse_range, Cli, Command};
pub use output::{Record, Report, Value, SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] AdxError),
    #[error("output: {0}")]
    Output(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// Process exit status: input errors give 1, numerical non-convergence 2.
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

/// Runs a parsed command line, writing the report to `out`. Returns the
/// exit status; diagnostics go to `err`.
pub fn run<W: std::io::Write, E: std::io::Write>(cli: &Cli, out: W, mut err: E) -> u8 {
    let report = match commands::execute(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let written = if cli.json { report.write_json(out) } else { report.write_csv(out) };
    if let Err(e) = written {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    if report.not_converged {
        EXIT_NUMERICAL
    } else {
        0
    }
}
