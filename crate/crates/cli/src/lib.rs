//! Command-line front end for `rulemine`: train, predict, evaluate, synth.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub mod artifact;
mod commands;

pub use artifact::ModelArtifact;

/// Seed used when neither `--seed` nor `RULEMINE_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "rulemine", version, about = "Mine first-match classification rules with LVQ-seeded particle swarms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with its mining report.
    Train(TrainArgs),
    /// Classify the rows of a CSV file.
    Predict(PredictArgs),
    /// Score a model on a labelled CSV file.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset and its schema.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: PathBuf,
    /// Model file to write. The report goes next to it as `<stem>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, env = "RULEMINE_SEED")]
    pub seed: Option<u64>,
    /// JSON file overriding miner, swarm and LVQ settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hold out this share of each class and report test metrics.
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Write decisions here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// JSON report path; defaults to `<data stem>.eval.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Class label whose misses count as Type I error (default: second label).
    #[arg(long)]
    pub positive_class: Option<String>,
    /// Also train the greedy covering baseline on `--train` and compare.
    #[arg(long, requires = "train")]
    pub baseline: bool,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub baseline_confidence: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub rows: usize,
    #[arg(long, env = "RULEMINE_SEED")]
    pub seed: Option<u64>,
    /// separable, credit3 or fragmented.
    #[arg(long)]
    pub profile: String,
    /// Output prefix: writes `<out>.csv` and `<out>.schema.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or schema-violating input.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Config(String),
    #[error("mining produced no rules; model written with default class {0}")]
    NoRules(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Config(_) => 2,
            CliError::NoRules(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<rulemine::Error> for CliError {
    fn from(e: rulemine::Error) -> Self {
        match e {
            rulemine::Error::Config(_) | rulemine::Error::Split(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Runs one command, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => commands::train(&args, out),
        Command::Predict(args) => commands::predict(&args, out),
        Command::Evaluate(args) => commands::evaluate(&args, out),
        Command::Synth(args) => commands::synth(&args, out),
    }
}
