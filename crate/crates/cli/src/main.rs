use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    calr_lab::run(calr_lab::Cli::parse())
}
