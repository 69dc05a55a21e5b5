use std::process::ExitCode;

use clap::Parser;
use opo_cli::commands::{run, Cli};
use opo_cli::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(output) => {
            print!("{}", output.text);
            if output.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: {}", CliError::CheckFailed);
                ExitCode::from(CliError::CheckFailed.exit_code() as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
