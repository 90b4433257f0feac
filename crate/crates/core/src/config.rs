//! Experiment configuration shared by the agent, policies, and simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one experiment: arm count, batch geometry, detection
/// settings, and the Beta prior used for posterior sampling.
///
/// `detection_threshold` plays a double role by design: it is the pairwise
/// detection probability that sets the evidence threshold for the
/// Bayes-factor policy, and the confidence parameter of the window-splitting
/// baseline, so a single knob trades off reactivity against stability for
/// both policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of arms under test.  At least 2.
    pub n_arms: usize,
    /// Units assigned per update.  At least 1.
    pub batch_size: u64,
    /// Tolerated probability of a spurious detection, in `(0, 0.5]`.
    pub detection_threshold: f64,
    /// Beta prior alpha for every arm's success rate.  Positive.
    pub prior_alpha: f64,
    /// Beta prior beta for every arm's success rate.  Positive.
    pub prior_beta: f64,
    /// Smallest number of batches a policy may leave in memory.  At least 2,
    /// so the window-splitting policy always has an interior split point.
    pub min_memory: usize,
    /// Power used when sizing the minimum detectable effect, in `(0, 1)`.
    pub mde_power: f64,
    /// Alternative-prior spread as a fraction of the minimum detectable
    /// effect.  Positive.
    pub h1_prior_sd_ratio: f64,
    /// Monte Carlo draws used to estimate allocation shares.  At least 1.
    pub allocation_samples: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_arms: 5,
            batch_size: 1000,
            detection_threshold: 0.05,
            prior_alpha: 1.0,
            prior_beta: 1.0,
            min_memory: 2,
            mde_power: 0.8,
            h1_prior_sd_ratio: 0.5,
            allocation_samples: 10_000,
        }
    }
}

impl ExperimentConfig {
    /// Checks every field range and reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if self.n_arms < 2 {
            return Err(Error::config(format!(
                "n_arms must be at least 2, got {}",
                self.n_arms
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if !(self.detection_threshold > 0.0 && self.detection_threshold <= 0.5) {
            return Err(Error::config(format!(
                "detection_threshold must lie in (0, 0.5], got {}",
                self.detection_threshold
            )));
        }
        if !(self.prior_alpha > 0.0 && self.prior_alpha.is_finite()) {
            return Err(Error::config(format!(
                "prior_alpha must be positive and finite, got {}",
                self.prior_alpha
            )));
        }
        if !(self.prior_beta > 0.0 && self.prior_beta.is_finite()) {
            return Err(Error::config(format!(
                "prior_beta must be positive and finite, got {}",
                self.prior_beta
            )));
        }
        if self.min_memory < 2 {
            return Err(Error::config(format!(
                "min_memory must be at least 2, got {}",
                self.min_memory
            )));
        }
        if !(self.mde_power > 0.0 && self.mde_power < 1.0) {
            return Err(Error::config(format!(
                "mde_power must lie in (0, 1), got {}",
                self.mde_power
            )));
        }
        if !(self.h1_prior_sd_ratio > 0.0 && self.h1_prior_sd_ratio.is_finite()) {
            return Err(Error::config(format!(
                "h1_prior_sd_ratio must be positive and finite, got {}",
                self.h1_prior_sd_ratio
            )));
        }
        if self.allocation_samples < 1 {
            return Err(Error::config("allocation_samples must be at least 1"));
        }
        Ok(())
    }
}
