use std::process::ExitCode;

use adx_lab::{run, Cli, EXIT_INPUT};
use clap::error::ErrorKind;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    ExitCode::from(run(&cli, std::io::stdout().lock(), std::io::stderr().lock()))
}
