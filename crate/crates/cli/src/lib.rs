//! Command-line experiments for the ncpain toolkit.
//!
//! Exit codes: 0 success, 1 usage, 2 near-singular numerics, 3 truncated flow.

pub mod args;
pub mod commands;
pub mod parse;
pub mod report;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{CliError, Outcome};
pub use report::ExperimentReport;

/// Runs one parsed command and stamps the wall-clock duration.
pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut outcome = match command {
        Command::Quasidet(a) => commands::quasidet(a),
        Command::Zc(a) => commands::zc(a),
        Command::Dress(a) => commands::dress(a),
        Command::Symmetric(a) => commands::symmetric(a),
    }?;
    outcome.report.duration_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(outcome)
}

/// Writes `<experiment>.json` and the CSV grids into `dir`.
pub fn write_artifacts(outcome: &Outcome, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join(format!("{}.json", outcome.report.experiment));
    std::fs::write(json, outcome.report.to_json())?;
    for (name, contents) in &outcome.files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Caps the global rayon pool at `NCPAIN_THREADS` when it is set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("NCPAIN_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(outcome) => {
            if let Some(dir) = &cli.out {
                if let Err(e) = write_artifacts(&outcome, dir) {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
            let _ = std::io::stdout().write_all(outcome.report.to_json().as_bytes());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
