//! Command-line front end: scenario files, builtin scenarios, command
//! dispatch and CSV/JSON artifacts.
//!
//! Exit codes: `0` success, `1` usage, parse, validation or I/O error,
//! `2` numerical failure, `3` a verification residual exceeded its tolerance.

// `!(x > 0.0)` is deliberate: NaN has to fail positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod load;
pub mod output;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{run, Command, Outcome, RunOptions};
pub use error::{CliError, CliResult};
pub use output::emit_csv;
pub use report::RunReport;
pub use scenario::{parse_scenario, parse_scenario_str, ScenarioFile};

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`).
pub const LOG_ENV: &str = "COR_FORGE_LOG";

#[derive(Debug, Parser)]
#[command(name = "cor-forge", version, about = "Hybrid interaction pictures of factorized Dyson maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Integrate kets and conjugate kets in one picture.
    Simulate(CommonArgs),
    /// Integrate each observable under the composite Coriolis operator.
    Heisenberg(CommonArgs),
    /// Integrate the density matrix of the initial ensemble.
    Density(CommonArgs),
    /// Integrate the metric law and compare with the direct Gram product.
    Metric(CommonArgs),
    /// Check every invariant across all pictures.
    Verify(CommonArgs),
    /// Spectra of the ladder Hamiltonians, or the Jones–Mateo levels.
    Spectrum(CommonArgs),
    /// Composite Coriolis operators, numerically or (with --symbolic) exactly.
    Coriolis(CommonArgs),
    /// Simulate in every picture, in parallel.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file or builtin name (two-level, fring-tenney, jones-mateo).
    pub scenario: String,
    /// Picture index j (0 ..= N); defaults to the scenario's own.
    #[arg(long)]
    pub picture: Option<usize>,
    /// Worker threads for fan-out across pictures.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Print exact closed forms (coriolis only).
    #[arg(long)]
    pub symbolic: bool,
}

impl CliCommand {
    fn split(self) -> (Command, CommonArgs) {
        match self {
            CliCommand::Simulate(a) => (Command::Simulate, a),
            CliCommand::Heisenberg(a) => (Command::Heisenberg, a),
            CliCommand::Density(a) => (Command::Density, a),
            CliCommand::Metric(a) => (Command::Metric, a),
            CliCommand::Verify(a) => (Command::Verify, a),
            CliCommand::Spectrum(a) => (Command::Spectrum, a),
            CliCommand::Coriolis(a) => (Command::Coriolis, a),
            CliCommand::Sweep(a) => (Command::Sweep, a),
        }
    }
}

/// Parses arguments, runs, prints, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (command, args) = cli.command.split();
    let opts = RunOptions { picture: args.picture, jobs: args.jobs, out: args.out, symbolic: args.symbolic };
    let result = load::load(&args.scenario).and_then(|s| run(command, &s, &opts));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            if outcome.exit_code() != 0 {
                let failed = outcome.report.failed().join(", ");
                eprintln!("error: {}", CliError::Verification(failed));
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
