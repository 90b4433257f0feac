//! Success-rate estimation over the retained window.
//!
//! Small per-arm samples make raw window rates noisy, so pairwise testing
//! runs on rates shrunk toward the grand mean with a positive-part
//! James-Stein estimator.  Pooled rates and difference standard errors for
//! pairs of arms live here too.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::window::ArmWindowSummary;

/// Window estimate for one arm that received traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmEstimate {
    pub arm: usize,
    pub assignments: u64,
    /// Raw window rate `successes / assignments`.
    pub raw: f64,
    /// Rate after shrinkage toward the grand mean.
    pub shrunk: f64,
}

/// James-Stein output: shrunk rates for every arm with data, plus the grand
/// mean and the shrink factor that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrunkEstimates {
    pub estimates: Vec<ArmEstimate>,
    pub grand_mean: f64,
    /// Positive-part factor in `[0, 1]`; 1 means no shrinkage.
    pub shrink_factor: f64,
}

impl ShrunkEstimates {
    /// Shrunk rate for `arm`, or `None` if the arm had no window data.
    pub fn shrunk_for(&self, arm: usize) -> Option<f64> {
        self.estimates.iter().find(|e| e.arm == arm).map(|e| e.shrunk)
    }
}

/// Positive-part James-Stein shrinkage of window rates toward their grand
/// mean.
///
/// Arms without window data are excluded (their rate is undefined).  With
/// `k` participating arms, unweighted grand mean `g`, squared deviation sum
/// `S = sum (r_a - g)^2`, and mean sampling variance
/// `v = mean of r_a (1 - r_a) / n_a`, the factor is
/// `c = max(0, 1 - (k - 3) v / S)`.  Too few arms for the factor to be
/// meaningful (`k < 4`) or no spread at all (`S = 0`) leaves rates
/// unshrunk (`c = 1`).
pub fn james_stein(summaries: &[ArmWindowSummary]) -> Result<ShrunkEstimates> {
    let observed: Vec<(usize, u64, f64)> = summaries
        .iter()
        .filter_map(|s| s.rate.map(|r| (s.arm, s.assignments, r)))
        .collect();
    if observed.is_empty() {
        return Err(Error::insufficient(
            "james_stein needs at least one arm with window data",
        ));
    }
    let k = observed.len();
    let grand_mean = observed.iter().map(|&(_, _, r)| r).sum::<f64>() / k as f64;
    let spread: f64 = observed
        .iter()
        .map(|&(_, _, r)| (r - grand_mean).powi(2))
        .sum();
    let shrink_factor = if k < 4 || spread == 0.0 {
        1.0
    } else {
        let mean_var: f64 = observed
            .iter()
            .map(|&(_, n, r)| r * (1.0 - r) / n as f64)
            .sum::<f64>()
            / k as f64;
        (1.0 - (k as f64 - 3.0) * mean_var / spread).max(0.0)
    };
    let estimates = observed
        .into_iter()
        .map(|(arm, assignments, raw)| ArmEstimate {
            arm,
            assignments,
            raw,
            shrunk: grand_mean + shrink_factor * (raw - grand_mean),
        })
        .collect();
    Ok(ShrunkEstimates {
        estimates,
        grand_mean,
        shrink_factor,
    })
}

/// Success rate of the two arms pooled, as used under the no-difference
/// hypothesis.  A degenerate pooled count (all failures or all successes)
/// is Laplace-smoothed to `(s + 1) / (n + 2)` so downstream variances stay
/// positive.
pub fn pooled_rate(a: &ArmWindowSummary, b: &ArmWindowSummary) -> Result<f64> {
    let n = a.assignments + b.assignments;
    if n == 0 {
        return Err(Error::insufficient(format!(
            "arms {} and {} have no pooled assignments",
            a.arm, b.arm
        )));
    }
    let s = a.successes + b.successes;
    Ok(smoothed_if_degenerate(s, n))
}

/// Standard error of the difference of two window rates under the pooled
/// rate: `sqrt(p (1 - p) (1/n_a + 1/n_b))`.
pub fn diff_standard_error(a: &ArmWindowSummary, b: &ArmWindowSummary, pooled: f64) -> Result<f64> {
    if a.assignments == 0 || b.assignments == 0 {
        return Err(Error::insufficient(format!(
            "standard error needs data on both arms {} and {}",
            a.arm, b.arm
        )));
    }
    if !(pooled > 0.0 && pooled < 1.0) {
        return Err(Error::contract(format!(
            "pooled rate must lie strictly in (0, 1), got {pooled}"
        )));
    }
    let inv_n = 1.0 / a.assignments as f64 + 1.0 / b.assignments as f64;
    Ok((pooled * (1.0 - pooled) * inv_n).sqrt())
}

/// `s / n` unless that is exactly 0 or 1, in which case the Laplace-smoothed
/// `(s + 1) / (n + 2)`.
pub(crate) fn smoothed_if_degenerate(s: u64, n: u64) -> f64 {
    let raw = s as f64 / n as f64;
    if raw == 0.0 || raw == 1.0 {
        (s as f64 + 1.0) / (n as f64 + 2.0)
    } else {
        raw
    }
}
