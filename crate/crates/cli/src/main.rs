use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod run;

use config::{Command, Params, OUT_DIR_ENV};

/// Coincidence rates, zero-coincidence scans, figure data and delay
/// calibration for cascaded Hong-Ou-Mandel interferometers.
///
/// Frequencies are in units of the biphoton width dOmega- and delays in units
/// of 1/dOmega-. Results are JSON records on stdout unless --out or the
/// KHOM_OUT_DIR environment variable names a destination.
#[derive(Parser)]
#[command(name = "homcli", version)]
struct Cli {
    /// JSON file with default parameter values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Coincidence rate at one delay setting.
    Rate(Params),
    /// Coarse-grained rate, analytic or box-averaged.
    Coarse(Params),
    /// Rate along one delay axis with the others held fixed.
    Scan(Params),
    /// Search a delay box for zero-coincidence points and rays.
    Zerofind(Params),
    /// Write contour and cut data as CSV files.
    Figure(Params),
    /// Recover stage offsets from a dip scan and a peak scan.
    Calibrate(Params),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, params) = match cli.command {
        Cmd::Rate(p) => (Command::Rate, p),
        Cmd::Coarse(p) => (Command::Coarse, p),
        Cmd::Scan(p) => (Command::Scan, p),
        Cmd::Zerofind(p) => (Command::Zerofind, p),
        Cmd::Figure(p) => (Command::Figure, p),
        Cmd::Calibrate(p) => (Command::Calibrate, p),
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let result = config::resolve(command, params, cli.config.as_deref(), out_dir).and_then(|cfg| run::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::json!({
                "error": {
                    "command": command.name(),
                    "message": format!("{err:#}"),
                }
            });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
