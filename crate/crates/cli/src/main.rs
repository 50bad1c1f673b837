//! `singcert` command-line interface.

mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::{Failure, Outcome};
use output::Report;

const EXIT_USAGE: u8 = 1;
const EXIT_REFUSED: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("SINGCERT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| format!("SINGCERT_THREADS={v:?} is not a positive integer"))?;
        if n == 0 {
            return Err("SINGCERT_THREADS must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn error_value(e: &singcert::Error) -> Value {
    let debug = format!("{e:?}");
    let kind = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
    json!({ "kind": kind, "message": e.to_string() })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    if let Command::Catalog = cli.command {
        let text = serde_json::to_string_pretty(&commands::catalog_listing()).expect("json");
        let _ = writeln!(std::io::stdout().lock(), "{text}");
        return ExitCode::SUCCESS;
    }
    let (cfg, f) = match commands::resolve(&cli.command) {
        Ok(v) => v,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(_) => unreachable!("resolve only reports usage errors"),
    };
    let common = match &cli.command {
        Command::Bounds { common, .. } | Command::Verify { common, .. } | Command::Morse { common, .. } => common,
        Command::Catalog => unreachable!(),
    };
    if matches!(cli.command, Command::Morse { action: args::MorseAction::Perturb, .. }) {
        eprintln!(
            "warning: density constants scale with the entropy constant c = {}; no explicit value is known, set it with --c-entropy",
            cfg.c_entropy
        );
    }
    let outcome = match &cli.command {
        Command::Bounds { theorem, .. } => commands::run_theorem(*theorem, false, &cfg, &f),
        Command::Verify { theorem, .. } => commands::run_theorem(*theorem, true, &cfg, &f),
        Command::Morse { action, .. } => commands::run_morse(*action, &cfg, &f),
        Command::Catalog => unreachable!(),
    };

    let config = serde_json::to_value(&cfg).expect("config serializes");
    let (status, code, result, verification, error) = match outcome {
        Ok(Outcome { result, verification }) => {
            let passed = verification.as_ref().is_none_or(|r| r.all_passed());
            if passed {
                ("ok", 0, result, verification, None)
            } else {
                ("verification_failed", EXIT_VERIFY, result, verification, None)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Refused(e)) => {
            eprintln!("refused: {e}");
            ("refused", EXIT_REFUSED, Value::Null, None, Some(error_value(&e)))
        }
        Err(Failure::Verification(e)) => {
            eprintln!("verification error: {e}");
            ("verification_failed", EXIT_VERIFY, Value::Null, None, Some(error_value(&e)))
        }
    };
    let report = Report {
        schema: output::SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        timestamp: output::timestamp(),
        config,
        status,
        result,
        verification: verification.as_ref(),
        error,
    };
    let value = serde_json::to_value(&report).expect("report serializes");
    let text = serde_json::to_string_pretty(&value).expect("json");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = &common.json {
        if let Err(e) = std::fs::write(path, format!("{text}\n")) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE);
        }
    }
    if let Some(path) = &common.csv {
        if let Err(e) = output::write_csv(path, &value) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE);
        }
    }
    ExitCode::from(code)
}
