//! `dance`: render kaleidoscope images and run the classification pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 internal error.

mod args;
mod commands;
mod render;
mod util;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use util::{Internal, Usage};

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Render(a) => render::run(a),
        Command::Segments(a) => commands::segments(a),
        Command::Synth(a) => commands::synth(a),
        Command::Split(a) => commands::split(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Eval(a) => commands::eval(a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<Usage>()) {
        1
    } else if err.chain().any(|e| e.is::<Internal>()) {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
