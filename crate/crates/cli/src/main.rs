//! `laserchan`: run laser-channel scenarios from JSON configs.
//!
//! Exit codes: 0 success, 1 invalid input or failed validation checks,
//! 2 truncation overflow (the message names a basis size that should fit).

mod config;
mod error;
mod evolve;
mod validate;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use laserchan::LaserParams;

use crate::config::ScenarioConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "laserchan", version, about = "Single-mode laser channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve the configured state over the time grid and emit observables
    /// as CSV (stdout, or timeseries.csv plus summary.json under --out).
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the Kraus evolution with closed forms and the master-equation
    /// integrator; prints a JSON report.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Steady-state properties for kappa > g, as JSON.
    Steady {
        #[arg(long)]
        g: f64,
        #[arg(long)]
        kappa: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors share the "invalid input" code
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Evolve { config, out } => {
            let config = ScenarioConfig::load(&config)?;
            let run = evolve::run(&config)?;
            match out {
                None => evolve::write_csv(io::stdout().lock(), &run.records)?,
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    evolve::write_csv(fs::File::create(dir.join("timeseries.csv"))?, &run.records)?;
                    write_json(fs::File::create(dir.join("summary.json"))?, &evolve::summary(&config, &run))?;
                }
            }
            Ok(())
        }
        Command::Validate { config } => {
            let config = ScenarioConfig::load(&config)?;
            let report = validate::run(&config)?;
            write_json(io::stdout().lock(), &report)?;
            report.outcome()
        }
        Command::Steady { g, kappa } => {
            let params = LaserParams::new(g, kappa)?;
            write_json(io::stdout().lock(), &steady(&params)?)
        }
    }
}

fn steady(params: &LaserParams) -> Result<serde_json::Value, CliError> {
    use laserchan::channel::equivalent_temperature;
    use laserchan::entropy::steady_entropy;
    use laserchan::Regime;

    if params.regime() != Regime::LossDominated {
        return Err(laserchan::Error::Regime { expected: "loss-dominated", found: params.regime() }.into());
    }
    let (g, kappa) = (params.gain(), params.loss());
    let nbar = g / (kappa - g);
    Ok(serde_json::json!({
        "g": g,
        "kappa": kappa,
        "regime": params.regime().as_str(),
        "n_mean": nbar,
        "g2": (nbar > 0.0).then_some(2.0),
        "entropy_nats": steady_entropy(params)?,
        "temperature": equivalent_temperature(params)?,
        "occupation_ratio": g / kappa,
    }))
}

fn write_json<W: Write, T: serde::Serialize>(mut out: W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
