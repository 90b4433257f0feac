//! Resolved run configuration: defaults, config-file overlay, then flag
//! overlay.  The serialised form doubles as the manifest, so re-running a
//! command from `manifest.json` reproduces its outputs exactly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use banditwin::policy::{PolicyKind, DEFAULT_FIXED_TARGET};
use banditwin::seed::derive_seed;
use banditwin::sim::{ScenarioKind, ScenarioSpec};
use banditwin::{Error, ExperimentConfig, Result};

use crate::cli::CommonOpts;

/// Everything a command needs, fully resolved.  Benchmark defaults: 5 arms,
/// batches of 1000, detection threshold 0.05, Beta(3, 80) reward prior,
/// 100 runs, 200 updates for abrupt/stationary and 300 for gradual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Which command produced this manifest; informational.
    pub command: String,
    pub scenario: ScenarioSpec,
    /// Policies to run.  `simulate` takes exactly one (default bayeswin);
    /// `sweep` always compares bayeswin and adwin.
    pub policies: Vec<String>,
    /// Detection thresholds; `simulate` uses the first, `sweep` all.
    pub thresholds: Vec<f64>,
    pub runs: usize,
    pub base_seed: u64,
    /// Bootstrap resamples for aggregate intervals.
    pub resamples: usize,
    /// Seed of the bootstrap streams; derived from `base_seed` unless set.
    pub bootstrap_seed: Option<u64>,
    /// Window length held by the `fixed` policy.
    pub fixed_target: usize,
    pub out: PathBuf,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: "simulate".into(),
            scenario: ScenarioSpec::for_kind(ScenarioKind::Abrupt),
            policies: Vec::new(),
            thresholds: vec![0.05],
            runs: 100,
            base_seed: 0,
            resamples: 1000,
            bootstrap_seed: None,
            fixed_target: DEFAULT_FIXED_TARGET,
            out: PathBuf::from("out"),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    /// Builds the effective config: defaults, then `--config` file, then
    /// individual flags.  `--scenario` and `--updates` re-derive the
    /// horizon (`change_update` is always half the updates); `--arms`
    /// keeps the scenario and experiment arm counts in lockstep.
    pub fn resolve(opts: &CommonOpts) -> Result<Self> {
        let mut cfg = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::config(format!("--config {}: {e}", path.display()))
                })?;
                serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                    Error::config(format!("--config {}: {e}", path.display()))
                })?
            }
            None => RunConfig::default(),
        };
        if let Some(kind) = opts.scenario {
            let keep_arms = cfg.scenario.n_arms;
            let keep_prior = cfg.scenario.reward_prior;
            cfg.scenario = ScenarioSpec::for_kind(kind);
            cfg.scenario.n_arms = keep_arms;
            cfg.scenario.reward_prior = keep_prior;
        }
        if let Some(updates) = opts.updates {
            if updates < 2 {
                return Err(Error::config(format!(
                    "--updates must be at least 2, got {updates}"
                )));
            }
            cfg.scenario.updates = updates;
            cfg.scenario.change_update = updates / 2;
        }
        if let Some(arms) = opts.arms {
            if arms < 2 {
                return Err(Error::config(format!(
                    "--arms must be at least 2, got {arms}"
                )));
            }
            cfg.scenario.n_arms = arms;
            cfg.experiment.n_arms = arms;
        }
        if let Some(batch) = opts.batch_size {
            if batch < 1 {
                return Err(Error::config("--batch-size must be at least 1"));
            }
            cfg.experiment.batch_size = batch;
        }
        if !opts.threshold.is_empty() {
            for &t in &opts.threshold {
                if !(t > 0.0 && t <= 0.5) {
                    return Err(Error::config(format!(
                        "--threshold {t} outside (0, 0.5]"
                    )));
                }
            }
            cfg.thresholds = opts.threshold.clone();
            cfg.experiment.detection_threshold = opts.threshold[0];
        }
        if !opts.policy.is_empty() {
            cfg.policies = opts.policy.clone();
        }
        if let Some(runs) = opts.runs {
            cfg.runs = runs;
        }
        if let Some(seed) = opts.seed {
            cfg.base_seed = seed;
            cfg.bootstrap_seed = None; // re-derive below
        }
        if let Some(resamples) = opts.resamples {
            cfg.resamples = resamples;
        }
        if let Some(target) = opts.fixed_target {
            cfg.fixed_target = target;
        }
        if let Some(out) = &opts.out {
            cfg.out = out.clone();
        }
        if cfg.bootstrap_seed.is_none() {
            cfg.bootstrap_seed = Some(derive_seed(cfg.base_seed, "bootstrap", 0));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.experiment.validate()?;
        if self.scenario.n_arms != self.experiment.n_arms {
            return Err(Error::config(format!(
                "scenario has {} arms but experiment config has {}",
                self.scenario.n_arms, self.experiment.n_arms
            )));
        }
        if self.runs < 2 {
            return Err(Error::config(format!(
                "--runs must be at least 2 so intervals are defined, got {}",
                self.runs
            )));
        }
        if self.resamples < 100 {
            return Err(Error::config(format!(
                "--resamples must be at least 100, got {}",
                self.resamples
            )));
        }
        if self.thresholds.is_empty() {
            return Err(Error::config("--threshold list must not be empty"));
        }
        for &t in &self.thresholds {
            if !(t > 0.0 && t <= 0.5) {
                return Err(Error::config(format!("--threshold {t} outside (0, 0.5]")));
            }
        }
        for name in &self.policies {
            PolicyKind::parse(name, self.fixed_target)?;
        }
        Ok(())
    }

    /// The single policy a `simulate` invocation runs.
    pub fn simulate_policy(&self) -> Result<PolicyKind> {
        match self.policies.as_slice() {
            [] => Ok(PolicyKind::BayesWin),
            [name] => PolicyKind::parse(name, self.fixed_target),
            more => Err(Error::config(format!(
                "--policy accepts a single value for simulate, got {}",
                more.len()
            ))),
        }
    }

    /// Sweep always contrasts the two adaptive policies; any other
    /// explicit `--policy` selection is rejected rather than ignored.
    pub fn sweep_policies(&self) -> Result<()> {
        let expected = ["bayeswin", "adwin"];
        if self.policies.is_empty() || self.policies == expected {
            Ok(())
        } else {
            Err(Error::config(
                "sweep always compares bayeswin and adwin; drop --policy",
            ))
        }
    }

    pub fn bootstrap_seed(&self) -> u64 {
        self.bootstrap_seed
            .unwrap_or_else(|| derive_seed(self.base_seed, "bootstrap", 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_opts() -> CommonOpts {
        CommonOpts {
            scenario: None,
            policy: Vec::new(),
            threshold: Vec::new(),
            runs: None,
            updates: None,
            batch_size: None,
            arms: None,
            seed: None,
            resamples: None,
            fixed_target: None,
            out: None,
            config: None,
        }
    }

    #[test]
    fn defaults_follow_the_benchmark_protocol() {
        let cfg = RunConfig::resolve(&no_opts()).unwrap();
        assert_eq!(cfg.scenario.kind, ScenarioKind::Abrupt);
        assert_eq!(cfg.scenario.n_arms, 5);
        assert_eq!(cfg.scenario.reward_prior, (3.0, 80.0));
        assert_eq!(cfg.scenario.updates, 200);
        assert_eq!(cfg.experiment.batch_size, 1000);
        assert_eq!(cfg.experiment.detection_threshold, 0.05);
        assert_eq!(cfg.runs, 100);
        assert!(cfg.bootstrap_seed.is_some());
    }

    #[test]
    fn gradual_scenario_lengthens_the_horizon() {
        let mut opts = no_opts();
        opts.scenario = Some(ScenarioKind::Gradual);
        let cfg = RunConfig::resolve(&opts).unwrap();
        assert_eq!(cfg.scenario.updates, 300);
    }

    #[test]
    fn updates_override_keeps_the_change_point_interior() {
        let mut opts = no_opts();
        opts.updates = Some(10);
        let cfg = RunConfig::resolve(&opts).unwrap();
        assert_eq!(cfg.scenario.updates, 10);
        assert_eq!(cfg.scenario.change_update, 5);
        assert!(cfg.scenario.validate().is_ok());
    }

    #[test]
    fn bad_threshold_flag_is_named() {
        let mut opts = no_opts();
        opts.threshold = vec![1.5];
        let err = RunConfig::resolve(&opts).unwrap_err().to_string();
        assert!(err.contains("--threshold"), "{err}");
        assert!(err.contains("1.5"), "{err}");
    }

    #[test]
    fn arms_flag_updates_both_views() {
        let mut opts = no_opts();
        opts.arms = Some(3);
        let cfg = RunConfig::resolve(&opts).unwrap();
        assert_eq!(cfg.scenario.n_arms, 3);
        assert_eq!(cfg.experiment.n_arms, 3);
    }

    #[test]
    fn simulate_takes_exactly_one_policy() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.simulate_policy().unwrap(),
            PolicyKind::BayesWin
        ));
        cfg.policies = vec!["adwin".into()];
        assert!(matches!(cfg.simulate_policy().unwrap(), PolicyKind::Adwin));
        cfg.policies = vec!["adwin".into(), "bayeswin".into()];
        assert!(cfg.simulate_policy().is_err());
    }

    #[test]
    fn manifest_round_trips_through_serde() {
        let mut opts = no_opts();
        opts.seed = Some(9);
        opts.updates = Some(12);
        let cfg = RunConfig::resolve(&opts).unwrap();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let err = serde_json::from_str::<RunConfig>("{\"bogus\": 1}");
        assert!(err.is_err());
    }
}
