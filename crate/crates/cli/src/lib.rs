//! Command-line harness for crossflow: config ingestion, closed-form
//! analysis, simulation, sweeps and comparisons with CSV or JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::io::Write;

pub use commands::{cmd_analyze, cmd_compare, cmd_simulate, cmd_sweep};
pub use config::{Cli, Command, RunConfig};
pub use error::{CliError, Result};
pub use output::Report;

type CommandFn = fn(&RunConfig) -> Result<Report>;

/// Resolves the config, runs the command and emits its report.
pub fn run<W: Write>(cli: &Cli, stdout: W) -> Result<()> {
    let (args, vary, cmd): (_, &[String], CommandFn) = match &cli.command {
        Command::Analyze(a) => (a, &[], cmd_analyze),
        Command::Simulate(a) => (a, &[], cmd_simulate),
        Command::Compare(a) => (a, &[], cmd_compare),
        Command::Sweep(s) => (&s.common, &s.vary, cmd_sweep),
    };
    let config = RunConfig::resolve(args, vary)?;
    let report = cmd(&config)?;
    report.emit(config.format, config.out.as_deref(), stdout)
}
