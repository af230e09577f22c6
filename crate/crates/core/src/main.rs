use std::process::ExitCode;

use clap::Parser;
use feedin::cli::{run, CliConfig};

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, matching the exit-code contract.
    ExitCode::from(run(CliConfig::parse()))
}
