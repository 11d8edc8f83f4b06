use std::process::ExitCode;

use clap::Parser;
use ringpair_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if !cli.global.quiet {
                for w in &outcome.warnings {
                    eprintln!("warning: {w}");
                }
                for line in &outcome.summary {
                    println!("{line}");
                }
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
