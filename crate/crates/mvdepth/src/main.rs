use std::process::ExitCode;

use clap::Parser;
use mvdepth::cli::Cli;

fn main() -> ExitCode {
    match mvdepth::commands::run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
