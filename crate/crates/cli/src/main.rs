mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Command failure, split by exit code: bad invocation versus bad input.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(h2pc::Error),
}

impl From<h2pc::Error> for Failure {
    fn from(e: h2pc::Error) -> Self {
        match e {
            h2pc::Error::InvalidArgument(msg) => Failure::Usage(msg),
            other => Failure::Data(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Learn(a) => commands::learn(a),
        Command::LearnSkeleton(a) => commands::learn_skeleton(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Mlc(a) => commands::mlc(a),
        Command::ExportDot(a) => commands::export_dot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
