//! `invlag`: decide, verify and construct invariant Lagrangians from
//! problem files.
//!
//! Exit codes: 0 affirmative, 1 negative verdict, 2 input error, 3 numeric
//! or domain error.

#![allow(clippy::needless_range_loop)]

mod commands;
mod problem;
mod report;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{AnsatzMode, Failure, Outcome};
use problem::{Problem, ProblemError};

#[derive(Debug, Parser)]
#[command(name = "invlag", version, about = "Invariant Lagrangians for second-order systems on Lie groups")]
struct Cli {
    /// Seed for the sampling region (overrides the problem file; default 7).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of sample points (overrides the problem file; default 64).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Relative tolerance of sampled identity tests.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Write the JSON report to this path; `-` prints it instead of the summary.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check antisymmetry and the Jacobi identity of the structure constants.
    Validate { file: PathBuf },
    /// Check a multiplier against the Helmholtz conditions, or solve a
    /// polynomial ansatz for one.
    Helmholtz {
        file: PathBuf,
        /// `given`, `constant` or `poly:D`.
        #[arg(long, default_value = "given")]
        ansatz: AnsatzMode,
    },
    /// Decide whether the system has a regular Lagrangian and construct it.
    Obstruct {
        file: PathBuf,
        /// Use a polynomial ansatz (`constant` or `poly:D`) instead of the
        /// Lagrangian or multiplier in the file.
        #[arg(long, default_value = "given")]
        ansatz: AnsatzMode,
    },
    /// Integrate the reduced equations.
    Integrate {
        file: PathBuf,
        /// Also reconstruct the group curve.
        #[arg(long)]
        reconstruct: bool,
        /// Write the trajectory as CSV.
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Dimensions of the first and second cohomology.
    Cohomology { file: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Validate { .. } => "validate",
            Command::Helmholtz { .. } => "helmholtz",
            Command::Obstruct { .. } => "obstruct",
            Command::Integrate { .. } => "integrate",
            Command::Cohomology { .. } => "cohomology",
        }
    }

    fn file(&self) -> &Path {
        match self {
            Command::Validate { file }
            | Command::Helmholtz { file, .. }
            | Command::Obstruct { file, .. }
            | Command::Integrate { file, .. }
            | Command::Cohomology { file } => file,
        }
    }
}

fn run(cli: &Cli, p: &Problem, report: &mut report::Report) -> Result<Outcome, Failure> {
    let region = p.region(cli.samples, cli.seed).map_err(|e| Failure::input(e.to_string()))?;
    report.settings(commands::settings(&region, cli.tol));
    match &cli.command {
        Command::Validate { .. } => Ok(commands::validate(p)),
        Command::Cohomology { .. } => commands::cohomology(p),
        Command::Helmholtz { ansatz, .. } => commands::helmholtz(p, *ansatz, &region, cli.tol),
        Command::Obstruct { ansatz, .. } => commands::obstruct(p, *ansatz, &region, cli.tol),
        Command::Integrate { reconstruct, csv, .. } => commands::integrate_cmd(p, *reconstruct, csv.as_deref()),
    }
}

fn load_failure(e: &ProblemError) -> Outcome {
    let mut failure = Failure::input(e.to_string());
    if let ProblemError::Expression { field, text, error } = e {
        failure.detail = serde_json::json!({ "field": field, "text": text, "position": error.position, "reason": error.kind.to_string() });
    }
    failure.into_outcome()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = cli.command.file();
    let (outcome, report) = match problem::load(file) {
        Ok((p, bytes)) => {
            let mut report = commands::base_report(cli.command.name(), file, Some(&bytes));
            let outcome = run(&cli, &p, &mut report).unwrap_or_else(Failure::into_outcome);
            (outcome, report)
        }
        Err(e) => (load_failure(&e), commands::base_report(cli.command.name(), file, None)),
    };
    let (json, lines, exit) = outcome.into_report(report);
    let text = serde_json::to_string_pretty(&json).expect("report serializes");
    match cli.json.as_deref() {
        Some(path) if path == Path::new("-") => emit(&[text]),
        Some(path) => {
            if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(commands::EXIT_INPUT as u8);
            }
            print_summary(&json, &lines);
        }
        None => print_summary(&json, &lines),
    }
    ExitCode::from(exit as u8)
}

fn print_summary(json: &serde_json::Value, lines: &[String]) {
    let mut all = vec![format!("verdict: {}", json["verdict"].as_str().unwrap_or("?"))];
    all.extend_from_slice(lines);
    emit(&all);
}

/// Writes lines to stdout, ignoring a closed pipe.
fn emit(lines: &[String]) {
    let mut out = std::io::stdout().lock();
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}
