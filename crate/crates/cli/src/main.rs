//! `omega-green`: config-driven front end.
//!
//! ```text
//! omega-green run CONFIG.json [--out DIR] [--verbosity N]
//! omega-green report SUMMARY.json... [--out DIR]
//! ```
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

mod commands;
mod config;
mod output;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::RunConfig;
use output::OutDir;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<omega_green::Error> for CliError {
    fn from(e: omega_green::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "omega-green", version, about = "Weighted omega-pluricomplex Green functions on CP^1")]
struct Cli {
    /// 0 is silent, 1 prints a one-line result, 2 adds progress.
    #[arg(long, global = true, default_value_t = 1)]
    verbosity: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        config_path: Option<PathBuf>,
        #[arg(long = "config", conflicts_with = "config_path")]
        config: Option<PathBuf>,
        /// Output directory (overrides OUTPUT_DIR and the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge summary.json files into a CSV table and a digest.
    Report {
        paths: Vec<PathBuf>,
        /// Also write report.csv and report.txt here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Validation(format!("THREADS: expected a non-negative integer, got {raw:?}")))?;
    Ok(omega_green::par::configure_threads(n)?)
}

fn env_out() -> Option<PathBuf> {
    std::env::var_os("OUTPUT_DIR").filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn run(config_path: PathBuf, out: Option<PathBuf>, verbosity: u8) -> Result<(), CliError> {
    let t0 = Instant::now();
    let cfg = RunConfig::load(&config_path)?;
    let mut prepared = cfg.prepare()?;
    let root = out
        .or_else(env_out)
        .or_else(|| prepared.config.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    prepared.config.output_dir = Some(root.display().to_string());
    let dir = OutDir::create(&root)?;
    dir.write_json("effective_config.json", &prepared.config)?;
    if verbosity >= 2 {
        eprintln!(
            "{:?} on {}x{} grid, K = {}, Q = {}",
            prepared.config.command,
            prepared.grid.n_cells(),
            prepared.grid.n_cells(),
            prepared.set.label(),
            prepared.weight.label()
        );
    }

    let outcome = commands::execute(&prepared)?;

    let c = &prepared.config;
    let mut summary = Map::new();
    summary.insert("command".into(), json!(c.command));
    summary.insert("method".into(), json!(prepared.method));
    summary.insert(
        "grid".into(),
        json!({ "half_width": prepared.grid.half_width(), "n_cells": prepared.grid.n_cells(), "h": prepared.grid.h() }),
    );
    summary.insert("set".into(), json!(prepared.set.label()));
    summary.insert("weight".into(), json!(prepared.weight.label()));
    summary.insert("omega".into(), json!("fubini_study"));
    summary.insert("seed".into(), json!(c.seed));
    summary.insert("solver_tol".into(), json!(c.tolerances.solver));
    summary.extend(outcome.summary);
    summary.insert("status".into(), json!(if outcome.failure.is_some() { "numerical_failure" } else { "ok" }));
    summary.insert("failure".into(), outcome.failure.clone().map_or(Value::Null, Value::from));
    summary.insert("wall_time".into(), json!(t0.elapsed().as_secs_f64()));

    dir.write_field("V.csv", &outcome.field)?;
    dir.write_json("summary.json", &Value::Object(summary))?;
    if verbosity >= 1 {
        eprintln!("wrote {}", dir.path().display());
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn report(paths: Vec<PathBuf>, out: Option<PathBuf>, verbosity: u8) -> Result<(), CliError> {
    let r = report::build(&paths)?;
    let csv = r.to_csv();
    let digest = r.digest();
    if let Some(root) = out.or_else(env_out) {
        let dir = OutDir::create(root)?;
        dir.write_text("report.csv", &csv)?;
        dir.write_text("report.txt", &digest)?;
    }
    print!("{csv}");
    if verbosity >= 1 {
        eprint!("{digest}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.cmd {
        Cmd::Run { config_path, config, out } => match config_path.or(config) {
            Some(p) => run(p, out, cli.verbosity),
            None => Err(CliError::Validation("run: a config path is required".into())),
        },
        Cmd::Report { paths, out } => report(paths, out, cli.verbosity),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
