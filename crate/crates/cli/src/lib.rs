//! Command-line front end for `cantor-core`.
//!
//! Every subcommand is a pure function of its arguments: identical inputs give
//! byte-identical output. Exit codes: 0 success, 2 spec error, 3 hypothesis
//! violation, 4 undecided at the horizon.

pub mod app;
pub mod emit;
pub mod render;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use render::{render_psi_grid, PsiGrid};
pub use spec::{parse_digit_spec, parse_seq_spec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("undecided: {0}")]
    Undecided(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Spec(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Undecided(_) => 4,
        }
    }
}

impl From<cantor_core::Error> for CliError {
    fn from(e: cantor_core::Error) -> Self {
        match e {
            cantor_core::Error::Hypothesis(m) => CliError::Hypothesis(m),
            e => CliError::Spec(e.to_string()),
        }
    }
}

/// How a completed run should be reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Hypothesis(String),
    Undecided(String),
}

#[derive(Debug, Clone)]
pub struct Output {
    pub bytes: Vec<u8>,
    pub verdict: Verdict,
}

impl Output {
    pub fn ok(bytes: Vec<u8>) -> Self {
        Output { bytes, verdict: Verdict::Ok }
    }
}

/// Parses arguments, runs the subcommand, writes its output and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match app::Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = app::execute(&cli.command).and_then(|out| {
        write_output(cli.command.common().out.as_deref(), &out.bytes)?;
        Ok(out.verdict)
    });
    match result {
        Ok(Verdict::Ok) => 0,
        Ok(Verdict::Hypothesis(m)) => {
            eprintln!("hypothesis violated: {m}");
            3
        }
        Ok(Verdict::Undecided(m)) => {
            eprintln!("undecided: {m}");
            4
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn write_output(path: Option<&std::path::Path>, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(io),
        None => std::io::stdout().lock().write_all(bytes).map_err(io),
    }
}
