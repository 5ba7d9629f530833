mod commands;
mod config;
mod selftest;
mod summary;

use std::process::ExitCode;

use clap::Parser;

use commands::Failure;
use config::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Census(args) => commands::census(args),
        Command::Density(args) => commands::density(args),
        Command::Report(args) => commands::report(args),
        Command::Selftest => match selftest::run() {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("twinskew: self-test failed");
                return ExitCode::from(3);
            }
            Err(e) => Err(Failure::Core(e)),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("twinskew: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
