//! Batched multi-armed bandit experimentation with dynamic memory.
//!
//! An agent allocates batches of units across arms by Thompson sampling,
//! keeps a sliding window of recent batches, shrinks per-arm estimates
//! toward the pooled mean, and runs pairwise sequential Bayes-factor tests
//! on the window.  Memory policies decide after every batch whether the
//! window should grow, shrink, or hold: `bayeswin` reads the Bayes-factor
//! evidence directly, `adwin` cuts the window at statistically incompatible
//! split points, and fixed / unbounded windows serve as baselines.
//!
//! The [`sim`] module wraps the loop in seeded non-stationary environments
//! and aggregates repeated runs with bootstrap intervals.

pub mod agent;
pub mod config;
pub mod error;
pub mod estimation;
pub mod exec;
pub mod hypothesis;
pub mod policy;
pub mod seed;
pub mod sim;
pub mod window;

pub use agent::{agent_update, hash_assign, thompson_shares, AgentSnapshot, AllocationPlan};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use estimation::{james_stein, ArmEstimate, ShrunkEstimates};
pub use hypothesis::{
    bayes_factor, classify_band, decision_from_bf, fixed_horizon_mde, test_all_pairs,
    threshold_from_fdr, HypothesisPriors, PairwiseTest, TestDecision,
};
pub use policy::{adwin_adjust, bayeswin_adjust, PolicyAction, PolicyDecision, PolicyKind};
pub use sim::{
    bootstrap_series, run_scenario, threshold_sweep, AggregateSeries, MetricsRow, PairRow,
    ScenarioKind, ScenarioSpec, SimOutput, SweepRow,
};
pub use window::{ArmBatch, ArmWindowSummary, BatchStats, WindowMemory};
