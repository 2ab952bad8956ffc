use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use s2l_cli::{run, usage_error, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", usage_error(e).to_json_line());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.to_json_line());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
