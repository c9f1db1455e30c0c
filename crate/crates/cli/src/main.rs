use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

mod commands;
mod saved;

#[derive(Parser, Debug)]
#[command(name = "demu", version, about = "Gaussian-process and double emulators for grounded simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    pub fn require_config(&self) -> Result<&Path> {
        match &self.config {
            Some(p) => Ok(p),
            None => bail!("--config <path> is required for this command"),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a maximin Latin hypercube design to design.csv.
    Design(commands::DesignArgs),
    /// Evaluate the simulator in --config over a design; writes dataset.csv.
    Simulate(commands::SimulateArgs),
    /// Fit a GPE or double emulator to a dataset; writes model.json.
    Fit(commands::FitArgs),
    /// Predict with a saved model; writes predictions.csv (scored when y is known).
    Predict(commands::PredictArgs),
    /// CRPS and RMSE of stored predictions against the truth; writes score.csv.
    Score(commands::ScoreArgs),
    /// Run the Monte-Carlo comparison described by --config.
    Experiment,
    /// Reduce a run ensemble to a dataset at one output time; writes dataset.csv.
    Ingest(commands::IngestArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Design(a) => commands::design(a, &cli.common),
        Command::Simulate(a) => commands::simulate(a, &cli.common),
        Command::Fit(a) => commands::fit(a, &cli.common),
        Command::Predict(a) => commands::predict(a, &cli.common),
        Command::Score(a) => commands::score(a, &cli.common),
        Command::Experiment => commands::experiment(&cli.common),
        Command::Ingest(a) => commands::ingest(a, &cli.common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
