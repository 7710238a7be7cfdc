use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use wronski_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = execute(&cli);
    // A closed pipe on stdout is not an error worth reporting.
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(outcome.stdout.as_bytes());
    let _ = stdout.flush();
    if let Some(msg) = &outcome.stderr {
        eprintln!("{msg}");
    }
    ExitCode::from(outcome.exit.code() as u8)
}
