//! Experiment harness: synthetic tensors, decompositions and CSV metrics.

pub mod args;
pub mod commands;
pub mod report;

use std::fmt;

use args::{Cli, Command};

/// A run that completed its input checks but produced unusable numbers.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "numerical failure: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Decompose(a) => commands::decompose(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
    }
}

/// Process exit code for a failed run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if commands::is_numerical(err) {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}
