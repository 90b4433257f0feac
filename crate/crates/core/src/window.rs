//! Batch statistics and the sliding window of retained batches.
//!
//! The agent only ever sees aggregated per-batch counts, never individual
//! units, and every estimate downstream is computed from the batches the
//! memory policy has chosen to retain.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts for one arm within one batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmBatch {
    pub assignments: u64,
    pub successes: u64,
}

/// Aggregated outcome of one update: per-arm assignment and success counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    /// Position of this batch in the experiment's update sequence.
    pub update_index: u64,
    /// One entry per arm, indexed by arm id.
    pub per_arm: Vec<ArmBatch>,
}

impl BatchStats {
    /// Total units assigned across arms in this batch.
    pub fn total_assignments(&self) -> u64 {
        self.per_arm.iter().map(|a| a.assignments).sum()
    }

    fn check(&self, n_arms: usize) -> Result<()> {
        if self.per_arm.len() != n_arms {
            return Err(Error::contract(format!(
                "batch at update {} has {} arm entries, expected {}",
                self.update_index,
                self.per_arm.len(),
                n_arms
            )));
        }
        for (arm, counts) in self.per_arm.iter().enumerate() {
            if counts.successes > counts.assignments {
                return Err(Error::contract(format!(
                    "arm {} at update {} has {} successes out of {} assignments",
                    arm, self.update_index, counts.successes, counts.assignments
                )));
            }
        }
        Ok(())
    }
}

/// Window totals for one arm, with the maximum-likelihood success rate when
/// the arm received any traffic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmWindowSummary {
    pub arm: usize,
    pub assignments: u64,
    pub successes: u64,
    /// `successes / assignments`, or `None` for an arm with no assignments
    /// in the window.
    pub rate: Option<f64>,
}

/// Ordered, contiguous sequence of retained batches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMemory {
    n_arms: usize,
    batches: VecDeque<BatchStats>,
}

impl WindowMemory {
    pub fn new(n_arms: usize) -> Self {
        WindowMemory {
            n_arms,
            batches: VecDeque::new(),
        }
    }

    pub fn n_arms(&self) -> usize {
        self.n_arms
    }

    /// Number of batches currently held.
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// Iterates batches from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &BatchStats> {
        self.batches.iter()
    }

    /// Update index of the newest retained batch, if any.
    pub fn newest_update(&self) -> Option<u64> {
        self.batches.back().map(|b| b.update_index)
    }

    /// Appends the next batch.  Batches must arrive in contiguous update
    /// order; the first batch may start at any index.
    pub fn append_batch(&mut self, batch: BatchStats) -> Result<()> {
        batch.check(self.n_arms)?;
        if let Some(last) = self.newest_update() {
            if batch.update_index != last + 1 {
                return Err(Error::contract(format!(
                    "batch update index {} does not follow newest retained index {}",
                    batch.update_index, last
                )));
            }
        }
        self.batches.push_back(batch);
        Ok(())
    }

    /// Drops up to `k` of the oldest batches, never leaving fewer than
    /// `min_memory` (a window already at or below the floor is untouched).
    /// Returns the number actually dropped.
    pub fn drop_oldest(&mut self, k: usize, min_memory: usize) -> usize {
        let removable = self.batches.len().saturating_sub(min_memory);
        let dropping = k.min(removable);
        for _ in 0..dropping {
            self.batches.pop_front();
        }
        dropping
    }

    /// Per-arm totals over every retained batch, one entry per arm in arm
    /// order.  An empty window has no totals to report and is an error.
    pub fn summarize_window(&self) -> Result<Vec<ArmWindowSummary>> {
        if self.batches.is_empty() {
            return Err(Error::contract("cannot summarize an empty window"));
        }
        let mut totals = vec![(0u64, 0u64); self.n_arms];
        for batch in &self.batches {
            for (arm, counts) in batch.per_arm.iter().enumerate() {
                totals[arm].0 += counts.assignments;
                totals[arm].1 += counts.successes;
            }
        }
        Ok(totals
            .into_iter()
            .enumerate()
            .map(|(arm, (assignments, successes))| ArmWindowSummary {
                arm,
                assignments,
                successes,
                rate: (assignments > 0).then(|| successes as f64 / assignments as f64),
            })
            .collect())
    }

    /// Revalidates every stored invariant; used after deserialising a window
    /// from an external snapshot.
    pub fn validate(&self) -> Result<()> {
        for batch in &self.batches {
            batch.check(self.n_arms)?;
        }
        for pair in self.batches.iter().zip(self.batches.iter().skip(1)) {
            if pair.1.update_index != pair.0.update_index + 1 {
                return Err(Error::contract(format!(
                    "retained batches are not contiguous at update {}",
                    pair.1.update_index
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn batch(update_index: u64, counts: &[(u64, u64)]) -> BatchStats {
        BatchStats {
            update_index,
            per_arm: counts
                .iter()
                .map(|&(assignments, successes)| ArmBatch {
                    assignments,
                    successes,
                })
                .collect(),
        }
    }

    #[test]
    fn append_enforces_contiguity() {
        let mut w = WindowMemory::new(2);
        w.append_batch(batch(3, &[(10, 1), (10, 2)])).unwrap();
        w.append_batch(batch(4, &[(10, 0), (10, 0)])).unwrap();
        let err = w.append_batch(batch(6, &[(10, 0), (10, 0)])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert_eq!(w.len(), 2);
    }

    #[test]
    fn append_rejects_malformed_batches() {
        let mut w = WindowMemory::new(2);
        assert!(w.append_batch(batch(0, &[(10, 1)])).is_err());
        assert!(w.append_batch(batch(0, &[(10, 11), (5, 0)])).is_err());
    }

    #[test]
    fn drop_oldest_respects_floor() {
        let mut w = WindowMemory::new(1);
        for u in 0..5 {
            w.append_batch(batch(u, &[(10, 1)])).unwrap();
        }
        assert_eq!(w.drop_oldest(10, 2), 3);
        assert_eq!(w.len(), 2);
        assert_eq!(w.iter().next().unwrap().update_index, 3);
        // Already at the floor: nothing to drop.
        assert_eq!(w.drop_oldest(1, 2), 0);
        // Below the floor (early in a run) the window is left alone.
        let mut small = WindowMemory::new(1);
        small.append_batch(batch(0, &[(10, 1)])).unwrap();
        assert_eq!(small.drop_oldest(1, 2), 0);
        assert_eq!(small.len(), 1);
    }

    #[test]
    fn summarize_totals_and_flags_starved_arms() {
        let mut w = WindowMemory::new(3);
        w.append_batch(batch(0, &[(40, 4), (60, 3), (0, 0)])).unwrap();
        w.append_batch(batch(1, &[(10, 2), (90, 9), (0, 0)])).unwrap();
        let s = w.summarize_window().unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].assignments, s[0].successes), (50, 6));
        assert_eq!(s[0].rate, Some(0.12));
        assert_eq!((s[1].assignments, s[1].successes), (150, 12));
        assert_eq!(s[1].rate, Some(0.08));
        assert_eq!(s[2].assignments, 0);
        assert_eq!(s[2].rate, None);
    }

    #[test]
    fn empty_window_cannot_be_summarized() {
        let w = WindowMemory::new(2);
        assert!(matches!(w.summarize_window(), Err(Error::Contract(_))));
    }

    proptest! {
        /// Window totals depend only on the pooled counts, not on how the
        /// units were split into batches.
        #[test]
        fn summaries_are_rebatch_invariant(
            splits in prop::collection::vec((0u64..50, 0u64..50, 0u64..50, 0u64..50), 1..20),
        ) {
            let mut fine = WindowMemory::new(2);
            let mut totals = [(0u64, 0u64); 2];
            for (u, &(n0, k0, n1, k1)) in splits.iter().enumerate() {
                let b = batch(u as u64, &[(n0, k0.min(n0)), (n1, k1.min(n1))]);
                totals[0].0 += b.per_arm[0].assignments;
                totals[0].1 += b.per_arm[0].successes;
                totals[1].0 += b.per_arm[1].assignments;
                totals[1].1 += b.per_arm[1].successes;
                fine.append_batch(b).unwrap();
            }
            let mut coarse = WindowMemory::new(2);
            coarse
                .append_batch(batch(0, &[(totals[0].0, totals[0].1), (totals[1].0, totals[1].1)]))
                .unwrap();
            let a = fine.summarize_window().unwrap();
            let b = coarse.summarize_window().unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.assignments, y.assignments);
                prop_assert_eq!(x.successes, y.successes);
                prop_assert_eq!(x.rate, y.rate);
            }
        }
    }
}
