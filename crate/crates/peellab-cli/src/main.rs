//! `peellab`: calibrate step laws and run peeling experiments.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand};
use config::{Experiment, Keys};
use experiments::Failure;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "peellab", version, about = "Monte-Carlo peeling of critical Boltzmann planar maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file with `[common]` and per-experiment sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    keys: Keys,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate a step law and write it to `--out`.
    Calibrate(RunArgs),
    /// Fixed-edge peeling of the plane or half-plane map.
    Peel(RunArgs),
    /// Peeling by layers: hull records or heights.
    Layers(RunArgs),
    /// Uniform peeling with exponential clocks.
    Eden(RunArgs),
    /// Face percolation on the half-plane map.
    Perco(RunArgs),
    /// Entrance-time tails of Cauchy-type walks.
    WalkTau(RunArgs),
    /// Cauchy goodness of fit of the half-plane perimeter.
    Gof(RunArgs),
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (e, args) = match cli.command {
        Command::Calibrate(a) => (Experiment::Calibrate, a),
        Command::Peel(a) => (Experiment::Peel, a),
        Command::Layers(a) => (Experiment::Layers, a),
        Command::Eden(a) => (Experiment::Eden, a),
        Command::Perco(a) => (Experiment::Perco, a),
        Command::WalkTau(a) => (Experiment::WalkTau, a),
        Command::Gof(a) => (Experiment::Gof, a),
    };
    let keys = match config::resolve(e, args.config.as_deref(), args.keys) {
        Ok(k) => k,
        Err(err) => {
            eprintln!("{err}");
            return ExitCode::from(2);
        }
    };
    let check = keys.check.unwrap_or(false);
    match experiments::run(e, keys) {
        Ok(out) => {
            for est in &out.report.estimates {
                let verdict = match est.pass {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "-",
                };
                println!("{:<36} {:>14} [{}, {}] {verdict}", est.name, num(est.value), num(est.ci_low), num(est.ci_high));
            }
            println!("manifest: {}", out.manifest_path.display());
            if check && !out.report.pass() {
                eprintln!("gate failure");
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(err)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(Failure::Calibration(msg)) => {
            eprintln!("calibration failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
