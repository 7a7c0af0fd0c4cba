use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(levy_emm_cli::run(levy_emm_cli::Cli::parse()))
}
