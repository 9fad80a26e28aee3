//! Command-line experiments over the `starcore` library: threshold tables,
//! instance sampling, *-core scans, exact freezing scans and the greedy
//! solver. Per-trial records go to CSV, run summaries to JSON.

pub mod commands;
pub mod config;
pub mod summary;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] starcore::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    /// 0 success, 2 configuration, 3 scale, 4 failed invariant, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use starcore::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Input(_) | E::Domain(_) | E::Construction(_)) => 2,
            CliError::Core(E::Scale(_)) => 3,
            CliError::Core(E::Assertion(_)) => 4,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "starcore",
    version,
    about = "*-core and freezing experiments for random CSPs"
)]
pub struct Cli {
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub settings: Settings,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Threshold report and λ(r) for the requested densities.
    Thresholds,
    /// Write one instance file.
    Sample,
    /// Planted instances, *-core sizes against the fixed point.
    CoreScan,
    /// Exact frozen sets on small uniform-model instances.
    FreezeScan,
    /// Incremental greedy solver with local repair (heuristic).
    GreedySolve,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut settings = cli.settings;
    if let Some(path) = &cli.config {
        settings = settings.overlay(Settings::from_json_file(path)?);
    }
    let cfg = ExperimentConfig::resolve(settings)?;
    let json = cfg.settings.json.clone();
    match cli.command {
        Command::Thresholds => commands::thresholds(&cfg)?.write(json.as_deref()),
        Command::Sample => commands::sample(&cfg),
        Command::CoreScan => {
            let s = commands::core_scan(&cfg)?;
            s.print_aggregates();
            s.write(json.as_deref())
        }
        Command::FreezeScan => {
            let s = commands::freeze_scan(&cfg)?;
            s.print_aggregates();
            s.write(json.as_deref())
        }
        Command::GreedySolve => {
            let s = commands::greedy(&cfg)?;
            s.print_aggregates();
            s.write(json.as_deref())
        }
    }
}
