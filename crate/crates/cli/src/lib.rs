//! Command implementations for the `eivreg` binary.

pub mod args;
pub mod commands;
pub mod suites;

use std::path::Path;

use eivreg::mc::{self, format_number, Format};
use thiserror::Error;

use args::{Cli, Command, VerifyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] eivreg::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Config { path: String, source: serde_json::Error },
}

impl CliError {
    /// Every error is a usage or configuration problem; verification
    /// failures are reported through [`Outcome::failures`] instead.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// Text to emit and the number of failed verification checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub failures: usize,
}

impl Outcome {
    pub fn text(text: String) -> Self {
        Self { text, failures: 0 }
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures > 0 {
            1
        } else {
            0
        }
    }
}

pub fn render_table(header: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let join = |sep: &str| {
        let mut out = header.join(sep) + "\n";
        for row in rows {
            out.push_str(&row.join(sep));
            out.push('\n');
        }
        out
    };
    match format {
        Format::Csv => join(","),
        Format::Tsv => join("\t"),
        Format::Pretty => mc::pretty(header, rows),
    }
}

pub fn verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let checks = suites::run(args.suite, args.inject_bad_psi).map_err(eivreg::Error::from)?;
    let full = args.output.full_precision;
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| {
            vec![
                c.suite.to_string(),
                if c.passed { "PASS" } else { "FAIL" }.to_string(),
                format_number(c.value, full),
                format_number(c.tolerance, full),
                c.name.clone(),
            ]
        })
        .collect();
    let failures = checks.iter().filter(|c| !c.passed).count();
    let mut text = render_table(&["suite", "status", "value", "tolerance", "check"], &rows, args.output.format);
    text.push_str(&format!("# {} checks, {} failed\n", checks.len(), failures));
    Ok(Outcome { text, failures })
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Verify(a) => verify(a),
        Command::Fixture(a) => commands::fixture(a),
    }
}

/// Where the command's output goes, if not standard output.
pub fn out_path(cli: &Cli) -> Option<&Path> {
    match &cli.command {
        Command::Estimate(a) => a.output.out.as_deref(),
        Command::Simulate(a) => a.output.out.as_deref(),
        Command::Exact(a) => a.output.out.as_deref(),
        Command::Verify(a) => a.output.out.as_deref(),
        Command::Fixture(a) => a.out.as_deref(),
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Io { path: p.display().to_string(), source }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
