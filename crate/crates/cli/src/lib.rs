//! Command-line front end for the multi-level coded caching planner.
//!
//! [`run`] parses the arguments, executes one subcommand and returns the
//! process exit code: 0 on success, 2 for usage, parse and file errors, 3 for
//! model and validation errors, 4 when a simulated delivery fails to decode.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use thiserror::Error;

mod commands;
pub mod io;

pub use commands::Cli;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input files.
    #[error("{0}")]
    Usage(String),
    /// The inputs describe an invalid or unsupported instance.
    #[error("{0}")]
    Model(String),
    /// A simulated user could not decode its file.
    #[error("{0}")]
    Decode(String),
}

impl CliError {
    /// Process exit code of the error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 3,
            CliError::Decode(_) => 4,
        }
    }
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated values with 6 significant digits.
    Csv,
    /// JSON with full precision.
    Json,
}

/// Result of a command in both renderings.
#[derive(Debug, Clone)]
pub struct Report {
    /// CSV header.
    pub header: Vec<String>,
    /// CSV rows, already rendered.
    pub rows: Vec<Vec<String>>,
    /// Full-precision JSON value.
    pub json: serde_json::Value,
    /// Format used when none is requested.
    pub default_format: Format,
    /// Diagnostics for standard error, suppressed by `--quiet`.
    pub notes: Vec<String>,
}

impl Report {
    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).expect("in-memory writer");
                for r in &self.rows {
                    w.write_record(r).expect("in-memory writer");
                }
                String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
            }
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("stdout: {e}"))),
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let quiet = cli.quiet;
    let outcome = commands::execute(&cli).and_then(|(report, failure)| {
        if !quiet {
            for n in &report.notes {
                eprintln!("{n}");
            }
        }
        emit(&report.render(cli.format.unwrap_or(report.default_format)), cli.out.as_deref())?;
        failure.map_or(Ok(()), Err)
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
