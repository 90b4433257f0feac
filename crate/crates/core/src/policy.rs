//! Dynamic memory-length policies.
//!
//! All policies answer the same question after a batch is appended: how many
//! of the oldest batches should be forgotten?  The evidence-driven policy
//! reacts to the pairwise hypothesis tests (conclusive evidence in either
//! direction shrinks memory by one batch, inconclusive evidence grows it);
//! the window-splitting baseline drops old batches while any contiguous
//! split of the window shows a rate gap larger than its concentration
//! threshold; fixed and unbounded windows complete the baseline set.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimation::smoothed_if_degenerate;
use crate::hypothesis::{threshold_from_fdr, PairwiseTest};
use crate::window::WindowMemory;

/// Default retained length of the fixed-window baseline, in batches.
pub const DEFAULT_FIXED_TARGET: usize = 10;

/// What a policy wants done to the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAction {
    /// Keep the appended batch and everything before it.
    Grow,
    /// Net reduction of the remembered length by `batches`.
    Shrink { batches: usize },
    /// Leave the remembered length unchanged.
    Hold,
}

/// Diagnostic trigger of a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdjustReason {
    #[serde(rename = "H1_accepted")]
    H1Accepted,
    #[serde(rename = "all_H0")]
    AllH0,
    #[serde(rename = "inconclusive")]
    Inconclusive,
    #[serde(rename = "split_detected")]
    SplitDetected,
    #[serde(rename = "no_split")]
    NoSplit,
    #[serde(rename = "fixed")]
    Fixed,
    #[serde(rename = "unbounded")]
    Unbounded,
}

impl AdjustReason {
    pub fn as_str(self) -> &'static str {
        match self {
            AdjustReason::H1Accepted => "H1_accepted",
            AdjustReason::AllH0 => "all_H0",
            AdjustReason::Inconclusive => "inconclusive",
            AdjustReason::SplitDetected => "split_detected",
            AdjustReason::NoSplit => "no_split",
            AdjustReason::Fixed => "fixed",
            AdjustReason::Unbounded => "unbounded",
        }
    }
}

/// One policy adjustment: the action taken and why.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub action: PolicyAction,
    pub reason: AdjustReason,
}

/// A policy's externally visible state after an update: the remembered
/// length and the decision that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyState {
    pub memory_len: usize,
    pub last_decision: Option<PolicyDecision>,
}

/// Evidence-driven adjustment from the pairwise tests of the current update.
///
/// `m_prev` is the remembered length before this update's batch was
/// appended.  Any pair with a Bayes factor above `k_threshold` — a detected
/// difference — shrinks memory by one batch: the test has the power it
/// needs, and a shorter memory tracks change faster.  All pairs below
/// `1/k_threshold` — firm evidence of no differences — also shrinks, since
/// power is not the binding concern.  Anything in between grows memory by
/// one batch to buy more power.  Pairs without evidence count as
/// inconclusive.  A shrink that would cross `min_memory` becomes a hold.
pub fn bayeswin_adjust(
    tests: &[PairwiseTest],
    k_threshold: f64,
    m_prev: usize,
    min_memory: usize,
) -> PolicyDecision {
    let any_h1 = tests
        .iter()
        .any(|t| t.evidence.is_some_and(|e| e.bayes_factor > k_threshold));
    let all_h0 = !tests.is_empty()
        && tests
            .iter()
            .all(|t| t.evidence.is_some_and(|e| e.bayes_factor < 1.0 / k_threshold));
    if any_h1 {
        shrink_by_one(m_prev, min_memory, AdjustReason::H1Accepted)
    } else if all_h0 {
        shrink_by_one(m_prev, min_memory, AdjustReason::AllH0)
    } else {
        PolicyDecision {
            action: PolicyAction::Grow,
            reason: AdjustReason::Inconclusive,
        }
    }
}

fn shrink_by_one(m_prev: usize, min_memory: usize, reason: AdjustReason) -> PolicyDecision {
    if m_prev > min_memory {
        PolicyDecision {
            action: PolicyAction::Shrink { batches: 1 },
            reason,
        }
    } else {
        PolicyDecision {
            action: PolicyAction::Hold,
            reason,
        }
    }
}

/// Concentration threshold for the gap between two subwindow rates.
///
/// With `n0` and `n1` assignments in the subwindows, whole-window rate
/// `r_w` (variance-smoothed when degenerate), confidence `delta` corrected
/// for the `ln m` split tests in an `m`-batch window, and `h` the harmonic
/// mean of `n0` and `n1`:
/// `eps = sqrt((2/h) sigma^2 ln(2/delta')) + (2/(3h)) ln(2/delta')` where
/// `delta' = delta / ln(m)` and `sigma^2 = r_w (1 - r_w)`.
pub fn adwin_epsilon(n0: u64, n1: u64, r_w: f64, delta: f64, m: usize) -> Result<f64> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::contract(
            "adwin_epsilon needs assignments in both subwindows",
        ));
    }
    if m < 2 {
        return Err(Error::contract(format!(
            "adwin_epsilon needs a window of at least 2 batches, got {m}"
        )));
    }
    if !(0.0..=1.0).contains(&r_w) {
        return Err(Error::contract(format!(
            "window rate must lie in [0, 1], got {r_w}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::contract(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let n = n0 + n1;
    // Recover the success count to smooth a degenerate rate; exact because
    // the rate is exactly 0 or 1 in the degenerate cases.
    let rate = if r_w == 0.0 || r_w == 1.0 {
        smoothed_if_degenerate((r_w * n as f64).round() as u64, n)
    } else {
        r_w
    };
    let variance = rate * (1.0 - rate);
    let harmonic = 2.0 * n0 as f64 * n1 as f64 / n as f64;
    let delta_prime = delta / (m as f64).ln();
    let log_term = (2.0 / delta_prime).ln();
    Ok((2.0 / harmonic * variance * log_term).sqrt() + 2.0 / (3.0 * harmonic) * log_term)
}

/// Gap and threshold for one arm at one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmGap {
    pub arm: usize,
    /// `|r_older - r_newer|` between the subwindow rates.
    pub gap: f64,
    pub epsilon: f64,
}

/// Diagnostic view of one contiguous split of the window into an older part
/// of `split_point` batches and a newer remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdwinSplit {
    /// Number of batches in the older subwindow, in `1..=m-1`.
    pub split_point: usize,
    /// One entry per arm that received assignments on both sides.
    pub per_arm_gap: Vec<ArmGap>,
}

/// Per-arm prefix sums of (assignments, successes) over the window's
/// batches; `sums[arm][i]` covers batches `0..i`.
fn prefix_sums(memory: &WindowMemory) -> Vec<Vec<(u64, u64)>> {
    let n_arms = memory.n_arms();
    let mut sums = vec![vec![(0u64, 0u64)]; n_arms];
    for batch in memory.iter() {
        for (arm, counts) in batch.per_arm.iter().enumerate() {
            let last = *sums[arm].last().unwrap();
            sums[arm].push((last.0 + counts.assignments, last.1 + counts.successes));
        }
    }
    sums
}

fn span(sums: &[(u64, u64)], from: usize, to: usize) -> (u64, u64) {
    (sums[to].0 - sums[from].0, sums[to].1 - sums[from].1)
}

/// Whether any split of `batches[start..]` has an arm whose subwindow rate
/// gap reaches its threshold.
fn has_violation(sums: &[Vec<(u64, u64)>], start: usize, len0: usize, delta: f64) -> bool {
    let m = len0 - start;
    for split in start + 1..len0 {
        for arm_sums in sums {
            let (n0, s0) = span(arm_sums, start, split);
            let (n1, s1) = span(arm_sums, split, len0);
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let r_w = (s0 + s1) as f64 / (n0 + n1) as f64;
            let eps = adwin_epsilon(n0, n1, r_w, delta, m)
                .expect("subwindow counts and window length already checked");
            let gap = (s0 as f64 / n0 as f64 - s1 as f64 / n1 as f64).abs();
            if gap >= eps {
                return true;
            }
        }
    }
    false
}

/// Window-splitting adjustment: with the newest batch already appended,
/// repeatedly drop the oldest batch while any contiguous split of the
/// remaining window has an arm whose subwindow rates differ by at least the
/// split's threshold; stop when every split is quiet (strictly below
/// threshold) or the window is down to `min_memory`.  Returns the total
/// shrink applied, or a hold when no split was in violation.
pub fn adwin_adjust(memory: &mut WindowMemory, delta: f64, min_memory: usize) -> PolicyDecision {
    let sums = prefix_sums(memory);
    let len0 = memory.len();
    let mut dropped = 0;
    while len0 - dropped > min_memory && has_violation(&sums, dropped, len0, delta) {
        dropped += 1;
    }
    if dropped > 0 {
        memory.drop_oldest(dropped, min_memory);
        PolicyDecision {
            action: PolicyAction::Shrink { batches: dropped },
            reason: AdjustReason::SplitDetected,
        }
    } else {
        PolicyDecision {
            action: PolicyAction::Hold,
            reason: AdjustReason::NoSplit,
        }
    }
}

/// Every split of the current window with its per-arm gaps and thresholds;
/// the transparency counterpart of [`adwin_adjust`].  A window of fewer
/// than 2 batches has no splits.
pub fn adwin_splits(memory: &WindowMemory, delta: f64) -> Result<Vec<AdwinSplit>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::contract(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let sums = prefix_sums(memory);
    let m = memory.len();
    let mut out = Vec::new();
    for split in 1..m {
        let mut per_arm_gap = Vec::new();
        for (arm, arm_sums) in sums.iter().enumerate() {
            let (n0, s0) = span(arm_sums, 0, split);
            let (n1, s1) = span(arm_sums, split, m);
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let r_w = (s0 + s1) as f64 / (n0 + n1) as f64;
            per_arm_gap.push(ArmGap {
                arm,
                gap: (s0 as f64 / n0 as f64 - s1 as f64 / n1 as f64).abs(),
                epsilon: adwin_epsilon(n0, n1, r_w, delta, m)?,
            });
        }
        out.push(AdwinSplit {
            split_point: split,
            per_arm_gap,
        });
    }
    Ok(out)
}

/// Fixed-window baseline: shrink down to `target` when above it, otherwise
/// hold (a window still filling is left to grow).
pub fn fixed_window_adjust(m: usize, target: usize) -> PolicyDecision {
    if m > target {
        PolicyDecision {
            action: PolicyAction::Shrink { batches: m - target },
            reason: AdjustReason::Fixed,
        }
    } else {
        PolicyDecision {
            action: PolicyAction::Hold,
            reason: AdjustReason::Fixed,
        }
    }
}

/// Memory policy selected for an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    BayesWin,
    Adwin,
    Fixed { target: usize },
    Unbounded,
}

impl PolicyKind {
    /// Parses a policy name as accepted on the command line.
    pub fn parse(name: &str, fixed_target: usize) -> Result<Self> {
        match name {
            "bayeswin" => Ok(PolicyKind::BayesWin),
            "adwin" => Ok(PolicyKind::Adwin),
            "fixed" => Ok(PolicyKind::Fixed {
                target: fixed_target,
            }),
            "unbounded" => Ok(PolicyKind::Unbounded),
            other => Err(Error::config(format!(
                "unknown policy {other:?}; expected bayeswin, adwin, fixed, or unbounded"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::BayesWin => "bayeswin",
            PolicyKind::Adwin => "adwin",
            PolicyKind::Fixed { .. } => "fixed",
            PolicyKind::Unbounded => "unbounded",
        }
    }

    /// Runs this policy against a window whose newest batch is already
    /// appended and applies any shrink.  `m_prev` is the remembered length
    /// before the append; the evidence-driven policy's decision is relative
    /// to it (grow keeps the appended batch, shrink nets one batch below
    /// `m_prev`, hold returns to `m_prev`), while the other policies act on
    /// the appended length directly.
    pub fn adjust(
        &self,
        memory: &mut WindowMemory,
        tests: &[PairwiseTest],
        m_prev: usize,
        config: &ExperimentConfig,
    ) -> Result<PolicyDecision> {
        match self {
            PolicyKind::BayesWin => {
                let k = threshold_from_fdr(config.detection_threshold)?;
                let decision = bayeswin_adjust(tests, k, m_prev, config.min_memory);
                let target = match decision.action {
                    PolicyAction::Grow => memory.len(),
                    PolicyAction::Shrink { batches } => m_prev.saturating_sub(batches),
                    PolicyAction::Hold => m_prev,
                };
                memory.drop_oldest(memory.len().saturating_sub(target), config.min_memory);
                Ok(decision)
            }
            PolicyKind::Adwin => Ok(adwin_adjust(
                memory,
                config.detection_threshold,
                config.min_memory,
            )),
            PolicyKind::Fixed { target } => {
                let decision = fixed_window_adjust(memory.len(), *target);
                if let PolicyAction::Shrink { batches } = decision.action {
                    memory.drop_oldest(batches, config.min_memory);
                }
                Ok(decision)
            }
            PolicyKind::Unbounded => Ok(PolicyDecision {
                action: PolicyAction::Hold,
                reason: AdjustReason::Unbounded,
            }),
        }
    }
}
