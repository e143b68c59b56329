//! The `sgdlab` command line: parses scenario files, runs experiments and
//! writes plot-ready CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::FieldError;

#[derive(Debug, Parser)]
#[command(name = "sgdlab", version, about = "SGD near critical points under heavy- and light-tailed noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Root seed, overriding the file's
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Runs per cell, overriding the file's
    #[arg(long, global = true)]
    pub runs: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One batch from the [scenario] section: per-run CSV and JSON summary
    Run,
    /// Double-well convergence fractions after n_eps steps
    Table1,
    /// The same after a multiple of n_eps steps
    Table2,
    /// Exit sides from a sharp maximum, SGD against analytic bounds
    Table3,
    /// Exit sides from the runaway random walk against analytic bounds
    Escape,
    /// Containment near K-critical points
    Sticking,
    /// n_eps and its class diagnostics along an epsilon grid
    Timescale,
    /// Noisy SGD paths on the Himmelblau surface
    Himmelblau,
    /// The path of run 0 of the [scenario] batch
    Trajectory,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Table3 => "table3",
            Command::Escape => "escape",
            Command::Sticking => "sticking",
            Command::Timescale => "timescale",
            Command::Himmelblau => "himmelblau",
            Command::Trajectory => "trajectory",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(Vec<FieldError>),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub(crate) fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(vec![FieldError { path: String::new(), message: msg.to_string() }])
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(errors) => {
                writeln!(f, "configuration error:")?;
                for e in errors {
                    writeln!(f, "  {e}")?;
                }
                Ok(())
            }
            CliError::Numeric(m) => writeln!(f, "numeric failure: {m}"),
        }
    }
}

impl From<sgdlab::Error> for CliError {
    fn from(e: sgdlab::Error) -> Self {
        match e {
            sgdlab::Error::Config(m) => CliError::config(m),
            sgdlab::Error::Domain(m) | sgdlab::Error::Numeric(m) => CliError::Numeric(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("output: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::config(format!("output: {e}"))
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::execute(&cli) {
        Ok(written) => {
            for p in written {
                println!("wrote {}", p.display());
            }
            0
        }
        Err(e) => {
            eprint!("{e}");
            e.exit_code()
        }
    }
}
