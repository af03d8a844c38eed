//! Batch front end: configured pipeline runs, verification suites, and
//! plot-ready reports.
//!
//! Exit codes: 0 success, 1 failed checks, 2 schema/usage violation (no
//! run directory is created), 3 numerical failure (partial artifacts and
//! a manifest are kept).

mod checks;
mod config;
mod pipeline;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "minklab",
    version,
    about = "Curvature-equation and curvature-flow experiments on S^1 and S^2"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the pipeline described by a JSON config and write a run
    /// directory with artifacts and a manifest
    Run {
        /// Path to the JSON run configuration
        config: PathBuf,
    },
    /// Run a named check suite (grid | body | symmetry | spectral |
    /// functional | flow | all) and print measured-vs-expected rows
    Verify {
        /// Suite name
        suite: String,
    },
    /// Reshape a run directory's artifacts into plot-ready CSVs
    Report {
        /// Run directory containing manifest.json
        dir: PathBuf,
    },
}

fn cmd_run(config_path: &PathBuf) -> u8 {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", config_path.display());
            return 2;
        }
    };
    let cfg: config::RunConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config schema violation: {e}");
            return 2;
        }
    };
    let echo: serde_json::Value = serde_json::from_str(&text).unwrap_or(serde_json::Value::Null);
    let built = match config::validate_and_build(&cfg) {
        Ok(b) => b,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return 2;
        }
    };
    let dir = config::run_directory(&cfg, config_path);
    pipeline::execute(&cfg, echo, &built, &dir) as u8
}

fn cmd_verify(suite: &str) -> u8 {
    let rows = match verify::run_suite(suite) {
        Ok(rows) => rows,
        Err(msg) => {
            eprintln!("{msg}");
            return 2;
        }
    };
    print!("{}", checks::format_table(&rows));
    let failures: Vec<&checks::CheckRow> = rows.iter().filter(|r| !r.pass).collect();
    if failures.is_empty() {
        println!("suite {suite:?}: all {} checks passed", rows.len());
        0
    } else {
        println!("suite {suite:?}: {} of {} checks FAILED:", failures.len(), rows.len());
        for f in failures {
            println!("  - {}", f.name);
        }
        1
    }
}

fn cmd_report(dir: &PathBuf) -> u8 {
    match report::make_report(dir) {
        Ok(written) => {
            for w in written {
                println!("{w}");
            }
            0
        }
        Err(msg) => {
            eprintln!("{msg}");
            2
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Run { config } => cmd_run(config),
        Cmd::Verify { suite } => cmd_verify(suite),
        Cmd::Report { dir } => cmd_report(dir),
    };
    ExitCode::from(code)
}
