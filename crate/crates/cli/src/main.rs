//! `track-enrich`: train a forecast model, degrade tracking data into
//! broadcast-like frames, enrich discrete frames and evaluate the result.
//!
//! Exit status is 0 on success, 2 for configuration or validation errors and
//! 1 for failures while running. Log verbosity follows `TRACK_ENRICH_LOG`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use config::Settings;

#[derive(Parser, Debug)]
#[command(name = "track-enrich", version, about = "Continuous player positions from sparse broadcast frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file with flat keys; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Fit the forecast model on ground-truth tracking data
    Train,
    /// Degrade ground-truth tracking data into discrete frames
    SimulateBroadcast,
    /// Assign and interpolate discrete frames into full-team output
    Enrich,
    /// Compare enriched estimates with ground truth and write the report
    Evaluate,
    /// Write a seeded synthetic match as tracking and event CSVs
    Synthesize,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(anyhow::Error),
}

impl From<track_enrich::Error> for Failure {
    fn from(e: track_enrich::Error) -> Self {
        match e {
            track_enrich::Error::Config(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let base = match &cli.config {
        Some(path) => Settings::from_file(path).map_err(Failure::Config)?,
        None => Settings::default(),
    };
    let cfg = base.overlay(cli.settings).resolve().map_err(Failure::Config)?;
    match cli.command {
        Command::Train => commands::train_model(&cfg),
        Command::SimulateBroadcast => commands::simulate_broadcast(&cfg),
        Command::Enrich => commands::enrich(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Synthesize => commands::synthesize(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRACK_ENRICH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
