//! Batch driver: `synth`, `preprocess`, `sample`, `train`, `infer`,
//! `report`. Stages talk through files in their `--out` directories.

pub mod args;
pub mod cmd;
pub mod common;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod svg;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, Result};

pub fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth(a) => cmd::synth::run(g, a).map(drop),
        Command::Preprocess(a) => cmd::preprocess::run(g, a).map(drop),
        Command::Sample(a) => cmd::sample::run(g, a).map(drop),
        Command::Train(a) => cmd::train::run(g, a).map(drop),
        Command::Infer(a) => cmd::infer::run(g, a).map(drop),
        Command::Report(a) => cmd::report::run(g, a).map(drop),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
