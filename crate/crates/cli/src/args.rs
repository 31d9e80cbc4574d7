use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use noisyrank_core::QueryStrategy;

use crate::verify::Level;

#[derive(Debug, Parser)]
#[command(name = "noisyrank", version, about = "Rank a list from noisy pairwise judgements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank items interactively, one question at a time.
    Sort(SortArgs),
    /// Run a simulation sweep and write its CSV.
    Simulate(SimulateArgs),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SortArgs {
    /// Items to rank.
    #[arg(value_name = "LABEL", conflicts_with = "items")]
    pub labels: Vec<String>,
    /// File with one item per line; blank lines are ignored.
    #[arg(long, value_name = "FILE")]
    pub items: Option<PathBuf>,
    /// Assume answers are right with this probability.
    #[arg(long, conflicts_with = "unknown_p")]
    pub p: Option<f64>,
    /// Treat answer reliability as unknown (the default).
    #[arg(long)]
    pub unknown_p: bool,
    /// Ensemble size.
    #[arg(long = "n", value_name = "N")]
    pub ensemble_size: Option<usize>,
    /// Stop once one ordering holds more than 1 - epsilon of the ensemble.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// full or adjacent.
    #[arg(long)]
    pub strategy: Option<QueryStrategy>,
    #[arg(long, env = "NOISYRANK_SEED")]
    pub seed: Option<u64>,
    /// Continue a saved session directory.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["labels", "items", "p", "unknown_p", "ensemble_size", "epsilon", "strategy"])]
    pub resume: Option<PathBuf>,
    /// Where new sessions are stored.
    #[arg(long, value_name = "DIR", default_value = "noisyrank-sessions")]
    pub dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Sweep config, TOML or JSON (by extension).
    #[arg(long, value_name = "FILE")]
    pub sweep: Option<PathBuf>,
    /// List sizes, comma separated.
    #[arg(long, value_name = "L,...", value_delimiter = ',', conflicts_with = "sweep")]
    pub sizes: Vec<usize>,
    /// Channel reliabilities, comma separated.
    #[arg(long = "p", value_name = "P,...", value_delimiter = ',', conflicts_with = "sweep")]
    pub p_values: Vec<f64>,
    /// Ensemble sizes, comma separated.
    #[arg(long = "n", value_name = "N,...", value_delimiter = ',', conflicts_with = "sweep")]
    pub n_values: Vec<usize>,
    #[arg(long, conflicts_with = "sweep")]
    pub epsilon: Option<f64>,
    /// Trials per grid cell.
    #[arg(long, conflicts_with = "sweep")]
    pub trials: Option<usize>,
    #[arg(long, conflicts_with = "sweep")]
    pub strategy: Option<QueryStrategy>,
    /// Run the engine without knowledge of p.
    #[arg(long, conflicts_with = "sweep")]
    pub unknown_p: bool,
    #[arg(long, conflicts_with = "sweep")]
    pub max_questions: Option<usize>,
    /// Record wall time per trial (makes the CSV nondeterministic).
    #[arg(long)]
    pub wall_time: bool,
    /// Overrides the config's seed.
    #[arg(long, env = "NOISYRANK_SEED")]
    pub seed: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long, value_name = "CSV")]
    pub out: Option<PathBuf>,
    /// Worker threads for trials.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    #[arg(long, value_name = "DIR", default_value = "noisyrank-sessions")]
    pub data_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "quick")]
    pub level: Level,
    #[arg(long, env = "NOISYRANK_SEED")]
    pub seed: Option<u64>,
    /// JSON results file; full runs default to verify-report.json.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}
