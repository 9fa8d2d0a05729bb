use std::process::ExitCode;

use clap::Parser;

use hullcube_cli::app::{error_status, run, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_status(&e))
        }
    }
}
