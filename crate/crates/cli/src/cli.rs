//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use banditwin::sim::ScenarioKind;

#[derive(Debug, Parser)]
#[command(
    name = "banditwin",
    about = "Batched bandit simulator with dynamic-memory policies",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario under one policy and write metrics.csv, pairs.csv,
    /// aggregate.json, and manifest.json.
    Simulate(CommonOpts),
    /// Compare bayeswin and adwin across detection thresholds and write
    /// sweep.csv and manifest.json.
    Sweep(CommonOpts),
    /// Recompute aggregates from a metrics.csv and write report.json,
    /// warning when a sibling aggregate.json disagrees.
    Report(ReportOpts),
}

/// Flags shared by simulate and sweep.  Values resolve in three layers:
/// built-in benchmark defaults, then `--config`, then these flags.
#[derive(Debug, Args)]
pub struct CommonOpts {
    /// Environment: stationary, abrupt, or gradual.
    #[arg(long, value_parser = parse_scenario)]
    pub scenario: Option<ScenarioKind>,
    /// Memory policy: bayeswin, adwin, fixed, or unbounded.  Repeatable,
    /// but simulate accepts exactly one and sweep none.
    #[arg(long)]
    pub policy: Vec<String>,
    /// Detection threshold in (0, 0.5].  Repeatable for sweep.
    #[arg(long)]
    pub threshold: Vec<f64>,
    /// Independent runs to simulate (at least 2).
    #[arg(long)]
    pub runs: Option<usize>,
    /// Updates per run; the abrupt change lands at the midpoint.
    #[arg(long)]
    pub updates: Option<u64>,
    /// Units assigned per update.
    #[arg(long)]
    pub batch_size: Option<u64>,
    /// Number of arms.
    #[arg(long)]
    pub arms: Option<usize>,
    /// Base seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bootstrap resamples for interval estimates (at least 100).
    #[arg(long)]
    pub resamples: Option<usize>,
    /// Window length for the fixed policy.
    #[arg(long)]
    pub fixed_target: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config or manifest to start from; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportOpts {
    /// Path to a metrics.csv produced by simulate.
    pub metrics: PathBuf,
    /// Directory for report.json; defaults to the metrics.csv directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<ScenarioKind, String> {
    ScenarioKind::parse(s).map_err(|e| e.to_string())
}
