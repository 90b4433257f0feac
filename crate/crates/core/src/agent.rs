//! The batched Thompson-sampling agent.
//!
//! Each update absorbs one batch of aggregated outcomes, re-tests every
//! pair of arms, lets the memory policy forget stale batches, and derives
//! the next allocation plan from posteriors over the retained window only —
//! forgetting applies to the sampler itself, which is what lets a shorter
//! memory re-adapt allocations quickly after a change.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimation::james_stein;
use crate::exec;
use crate::hypothesis::{test_all_pairs, PairwiseTest, TestDecision};
use crate::policy::{PolicyKind, PolicyState};
use crate::seed::{derive_seed, fnv1a, mix};
use crate::window::{BatchStats, WindowMemory};

/// Current version of the snapshot JSON document.
pub const SNAPSHOT_VERSION: u32 = 1;

/// Monte-Carlo draws per deterministic chunk in [`thompson_shares`].
const MC_CHUNK: u64 = 4096;

/// Beta posterior of one arm's success rate over the retained window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmPosterior {
    pub arm: usize,
    pub alpha: f64,
    pub beta: f64,
}

/// Planned assignment shares, one per arm, summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub shares: Vec<f64>,
}

impl AllocationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.shares.is_empty() {
            return Err(Error::contract("allocation plan has no arms"));
        }
        let mut sum = 0.0;
        for (arm, &s) in self.shares.iter().enumerate() {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::contract(format!(
                    "share of arm {arm} must be non-negative and finite, got {s}"
                )));
            }
            sum += s;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!(
                "shares must sum to 1 within 1e-9, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Full agent state after an update; serialises to a versioned JSON
/// document for inspection and fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub version: u32,
    /// Number of batches absorbed so far.
    pub update_index: u64,
    /// Base seed from which this agent's per-update draws derive.
    pub seed: u64,
    pub memory: WindowMemory,
    pub posteriors: Vec<ArmPosterior>,
    pub tests: Vec<PairwiseTest>,
    pub plan: AllocationPlan,
    pub policy_state: PolicyState,
}

impl AgentSnapshot {
    /// Fresh agent before any data: empty memory, pure-prior posteriors,
    /// and an initial plan sampled from the priors.
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let memory = WindowMemory::new(config.n_arms);
        let posteriors = posteriors_from_window(&memory, config);
        let plan = thompson_shares(
            &posteriors,
            config.allocation_samples,
            derive_seed(seed, "plan", 0),
        )?;
        Ok(AgentSnapshot {
            version: SNAPSHOT_VERSION,
            update_index: 0,
            seed,
            memory,
            posteriors,
            tests: Vec::new(),
            plan,
            policy_state: PolicyState {
                memory_len: 0,
                last_decision: None,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::contract(format!("snapshot serialisation failed: {e}")))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let snapshot: AgentSnapshot = serde_json::from_str(json)
            .map_err(|e| Error::config(format!("invalid snapshot JSON: {e}")))?;
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::config(format!(
                "unsupported snapshot version {} (expected {})",
                snapshot.version, SNAPSHOT_VERSION
            )));
        }
        snapshot.memory.validate()?;
        snapshot.plan.validate()?;
        Ok(snapshot)
    }
}

/// Beta posteriors over the retained window: `prior + windowed counts` per
/// arm.  An empty window yields the pure priors.
pub fn posteriors_from_window(memory: &WindowMemory, config: &ExperimentConfig) -> Vec<ArmPosterior> {
    let mut posteriors: Vec<ArmPosterior> = (0..memory.n_arms())
        .map(|arm| ArmPosterior {
            arm,
            alpha: config.prior_alpha,
            beta: config.prior_beta,
        })
        .collect();
    for batch in memory.iter() {
        for (arm, counts) in batch.per_arm.iter().enumerate() {
            posteriors[arm].alpha += counts.successes as f64;
            posteriors[arm].beta += (counts.assignments - counts.successes) as f64;
        }
    }
    posteriors
}

/// Monte-Carlo assignment shares: the frequency with which each arm's
/// posterior draw is the maximum over `samples` joint draws, ties broken by
/// lowest arm index.  Deterministic for a given seed, regardless of thread
/// count, because draws run in fixed-size chunks with per-chunk derived
/// seeds.
pub fn thompson_shares(
    posteriors: &[ArmPosterior],
    samples: u64,
    seed: u64,
) -> Result<AllocationPlan> {
    if posteriors.is_empty() {
        return Err(Error::contract("thompson_shares needs at least one arm"));
    }
    if samples < 1 {
        return Err(Error::contract("thompson_shares needs at least one draw"));
    }
    let distributions: Vec<Beta<f64>> = posteriors
        .iter()
        .map(|p| {
            Beta::new(p.alpha, p.beta).map_err(|e| {
                Error::contract(format!(
                    "invalid posterior for arm {}: alpha {}, beta {} ({e})",
                    p.arm, p.alpha, p.beta
                ))
            })
        })
        .collect::<Result<_>>()?;

    let n_chunks = samples.div_ceil(MC_CHUNK) as usize;
    let counts_per_chunk: Vec<Vec<u64>> = exec::map_indexed(n_chunks, |chunk| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "chunk", chunk as u64));
        let in_chunk = MC_CHUNK.min(samples - chunk as u64 * MC_CHUNK);
        let mut counts = vec![0u64; distributions.len()];
        let mut draws = vec![0.0f64; distributions.len()];
        for _ in 0..in_chunk {
            for (d, slot) in distributions.iter().zip(draws.iter_mut()) {
                *slot = d.sample(&mut rng);
            }
            let mut best = 0;
            for (arm, &v) in draws.iter().enumerate().skip(1) {
                if v > draws[best] {
                    best = arm;
                }
            }
            counts[best] += 1;
        }
        counts
    });

    let mut totals = vec![0u64; posteriors.len()];
    for counts in counts_per_chunk {
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let plan = AllocationPlan {
        shares: totals
            .into_iter()
            .map(|c| c as f64 / samples as f64)
            .collect(),
    };
    plan.validate()?;
    Ok(plan)
}

/// Deterministically maps one unit to an arm under a plan: hash the
/// concatenation `unit_id:experiment_id` (FNV-1a with a splitmix64
/// finaliser), divide by 2^64 to get `u` in `[0, 1)`, and pick the arm
/// whose cumulative share interval contains `u`.
pub fn hash_assign(unit_id: &str, experiment_id: &str, plan: &AllocationPlan) -> Result<usize> {
    if unit_id.is_empty() || experiment_id.is_empty() {
        return Err(Error::contract(
            "unit_id and experiment_id must be non-empty",
        ));
    }
    plan.validate()?;
    let mut key = String::with_capacity(unit_id.len() + experiment_id.len() + 1);
    key.push_str(unit_id);
    key.push(':');
    key.push_str(experiment_id);
    let u = mix(fnv1a(key.as_bytes())) as f64 * 2f64.powi(-64);
    let mut acc = 0.0;
    for (arm, &share) in plan.shares.iter().enumerate() {
        acc += share;
        if u < acc {
            return Ok(arm);
        }
    }
    // Float rounding can leave u at or beyond the accumulated total; fall
    // back to the last arm that actually has mass.
    Ok(plan
        .shares
        .iter()
        .rposition(|&s| s > 0.0)
        .expect("validated plan has positive total share"))
}

/// Absorbs one batch and returns the updated agent.  The pipeline order is
/// fixed: append, summarize, shrink estimates, pairwise tests, policy
/// adjustment (tests always see the pre-adjustment window), then posteriors
/// and the next plan from the adjusted window.  On error the input snapshot
/// is left untouched.
pub fn agent_update(
    snapshot: &AgentSnapshot,
    batch: BatchStats,
    config: &ExperimentConfig,
    policy: PolicyKind,
) -> Result<AgentSnapshot> {
    config.validate()?;
    let m_prev = snapshot.memory.len();
    let mut memory = snapshot.memory.clone();
    memory.append_batch(batch)?;
    let summaries = memory.summarize_window()?;
    let tests = match james_stein(&summaries) {
        Ok(estimates) => test_all_pairs(&estimates, &summaries, config)?,
        // A batch with zero total assignments leaves no arm estimable.
        Err(Error::InsufficientData(_)) => no_evidence_tests(config.n_arms),
        Err(e) => return Err(e),
    };
    let decision = policy.adjust(&mut memory, &tests, m_prev, config)?;
    let posteriors = posteriors_from_window(&memory, config);
    let update_index = snapshot.update_index + 1;
    let plan = thompson_shares(
        &posteriors,
        config.allocation_samples,
        derive_seed(snapshot.seed, "plan", update_index),
    )?;
    Ok(AgentSnapshot {
        version: SNAPSHOT_VERSION,
        update_index,
        seed: snapshot.seed,
        memory: memory.clone(),
        posteriors,
        tests,
        plan,
        policy_state: PolicyState {
            memory_len: memory.len(),
            last_decision: Some(decision),
        },
    })
}

fn no_evidence_tests(n_arms: usize) -> Vec<PairwiseTest> {
    let mut out = Vec::with_capacity(n_arms * (n_arms - 1) / 2);
    for lo in 0..n_arms {
        for hi in lo + 1..n_arms {
            out.push(PairwiseTest {
                arm_lo: lo,
                arm_hi: hi,
                evidence: None,
                decision: TestDecision::Inconclusive,
            });
        }
    }
    out
}
