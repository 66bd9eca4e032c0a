//! The `tunnelprop` command line: ingest → positions → features →
//! evaluate, plus a synthetic scene generator.
//!
//! Exit codes: 0 success, 2 missing input, 3 validation failure,
//! 4 numerical failure, 1 anything else (e.g. unwritable output).

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

pub use commands::{
    cmd_evaluate, cmd_features, cmd_ingest, cmd_positions, cmd_synth, EvaluateOutput, FeaturesOutput, IngestSummary,
    PositionsOutput, SynthOutput,
};
pub use config::{Cli, Command, CommonArgs, ConfigFile, RunConfig, TruthKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingInput(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Output(_) => 1,
        }
    }
}

/// Parse `args` (program name first), run the command and return its exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = write!(out, "{e}");
                    0
                }
                kind => {
                    let _ = write!(err, "{e}");
                    if kind == ErrorKind::MissingRequiredArgument {
                        2
                    } else {
                        3
                    }
                }
            };
        }
    };
    let result = RunConfig::resolve(cli.command.args()).and_then(|cfg| match &cli.command {
        Command::Ingest(_) => cmd_ingest(&cfg).map(|s| s.to_string()),
        Command::Positions(_) => cmd_positions(&cfg).map(|s| s.to_string()),
        Command::Features(_) => cmd_features(&cfg).map(|s| s.to_string()),
        Command::Evaluate(_) => cmd_evaluate(&cfg).map(|s| s.to_string()),
        Command::Synth(_) => cmd_synth(&cfg).map(|s| s.to_string()),
    });
    match result {
        Ok(report) => {
            let _ = write!(out, "{report}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
