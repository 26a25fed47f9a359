mod args;
mod commands;
mod data;

use std::process::ExitCode;

use clap::Parser;
use phscreen::Error;

use args::{Cli, Command, Source};

/// Exit statuses: 0 ok, 2 bad data or usage, 3 training diverged, 4 model and record disagree.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Incompatible(String),
    Output(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Divergence { .. }) => 3,
            CliError::Incompatible(_) => 4,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Incompatible(m) => write!(f, "incompatible model: {m}"),
            CliError::Output(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let src = &cli.source;
    let out = &cli.output_dir;
    match &cli.command {
        Command::Stats => commands::stats(src, out),
        Command::Cohort => commands::cohort(src, out),
        Command::Split(a) => commands::split(src, out, a),
        Command::Train(a) => commands::train(src, out, a),
        Command::Eval(a) => commands::eval(src, out, a),
        Command::Screen(a) => commands::screen(a),
        Command::Synth => commands::synth(src, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
