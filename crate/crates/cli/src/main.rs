use std::process::ExitCode;

use clap::Parser;
use pactsolve::{run, Cli};

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
