use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use invzero_cli::commands::{self, MethodChoice, Settings};
use invzero_cli::document::{self, SystemDocument};
use invzero_cli::error::CliError;

/// Invariant zeros of linear state-space systems.
#[derive(Debug, Parser)]
#[command(name = "invzero", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Relative singular-value threshold for rank decisions.
    #[arg(long, global = true, value_name = "REL")]
    tol: Option<f64>,
    /// Relative threshold for the pencil rank-drop check [default: 1e-8].
    #[arg(long, global = true, value_name = "REL")]
    verify_tol: Option<f64>,
    /// Seed for normal-rank sampling and random squaring.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Independent squarings for nonsquare systems.
    #[arg(long, global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    rounds: u64,
    /// Apply the dynamic extension with pole -ALPHA (default 1 + spectral radius of A).
    #[arg(long, global = true, num_args = 0..=1, value_name = "ALPHA", allow_negative_numbers = true)]
    extend: Option<Option<f64>>,
    /// Compact JSON output.
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON output.
    #[arg(long, global = true)]
    pretty: bool,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the invariant zeros.
    Zeros {
        /// System document, or - for standard input.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
        method: MethodChoice,
    },
    /// Print the invariant zero form of a square system.
    Decompose {
        input: PathBuf,
    },
    /// Check candidate zeros for a rank drop of the system pencil.
    Verify {
        input: PathBuf,
        /// Comma-separated candidates such as "-1, 0, -0.77+1.38i".
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        zeros: String,
    },
    /// Run every applicable method on a document or a directory of documents.
    Compare {
        input: PathBuf,
    },
}

#[derive(Clone, Copy)]
enum Format {
    Text,
    Json,
    Pretty,
}

fn emit<T: Serialize + Display>(value: &T, format: Format) {
    match format {
        Format::Text => print!("{value}"),
        _ => emit_json(value, format),
    }
}

fn emit_all<T: Serialize + Display>(values: &[T], single: bool, format: Format) {
    match format {
        Format::Text => values.iter().for_each(|v| print!("{v}")),
        _ if single => emit_json(&values[0], format),
        _ => emit_json(&values, format),
    }
}

fn emit_json<T: Serialize + ?Sized>(value: &T, format: Format) {
    let text = match format {
        Format::Pretty => serde_json::to_string_pretty(value),
        _ => serde_json::to_string(value),
    };
    println!("{}", text.expect("reports serialize"));
}

fn run(cli: Cli) -> Result<(), CliError> {
    let format = match (cli.json, cli.pretty) {
        (true, _) => Format::Json,
        (_, true) => Format::Pretty,
        _ => Format::Text,
    };
    let mut settings = Settings::new(cli.tol, cli.verify_tol, cli.seed, cli.rounds as usize, cli.extend)?;
    settings.timing = cli.timing;
    match cli.command {
        Command::Zeros { input, method } => {
            let doc = SystemDocument::read(&input)?;
            let report = commands::cmd_zeros(&doc, method, &settings)?;
            emit(&report, format);
            let unverified = report.unverified();
            if unverified > 0 {
                return Err(CliError::Verification(format!(
                    "{unverified} reported zero(s) do not drop the pencil rank"
                )));
            }
            if report.expected_match == Some(false) {
                return Err(CliError::Verification("zeros differ from expected_zeros".into()));
            }
            Ok(())
        }
        Command::Decompose { input } => {
            let doc = SystemDocument::read(&input)?;
            emit(&commands::cmd_decompose(&doc, &settings)?, format);
            Ok(())
        }
        Command::Verify { input, zeros } => {
            let doc = SystemDocument::read(&input)?;
            let candidates = document::parse_complex_list(&zeros)?;
            let report = commands::cmd_verify(&doc, &candidates, &settings)?;
            emit(&report, format);
            let failed = report.candidates.iter().filter(|c| !c.drops).count();
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} candidate(s) do not drop the pencil rank")));
            }
            Ok(())
        }
        Command::Compare { input } => {
            let paths = commands::compare_inputs(&input)?;
            if paths.is_empty() {
                return Err(CliError::Parse(format!("no .json documents in {}", input.display())));
            }
            let reports = commands::cmd_compare(&paths, &settings);
            emit_all(&reports, !input.is_dir(), format);
            let unreadable = reports.iter().filter(|r| r.error.is_some()).count();
            if unreadable > 0 {
                return Err(CliError::Parse(format!("{unreadable} document(s) could not be read")));
            }
            let disagreeing = reports.iter().filter(|r| !r.all_agree()).count();
            if disagreeing > 0 {
                return Err(CliError::Verification(format!("methods disagree on {disagreeing} document(s)")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
