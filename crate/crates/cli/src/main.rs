use clap::Parser;
use std::process::ExitCode;

mod cli;
mod commands;
mod presets;

fn main() -> ExitCode {
    let args = cli::Args::parse();
    match commands::run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Exit codes: 2 usage (via clap), 3 validation, 4 I/O and missing
/// dependencies, 5 numeric failures.
fn exit_code(e: &qperc_core::Error) -> u8 {
    use qperc_core::Error::*;
    match e {
        Validation(_) | Format(_) | Domain(_) | Degenerate(_) => 3,
        Io(_) | Dependency(_) => 4,
        Propagation { .. } | Resource(_) => 5,
    }
}
