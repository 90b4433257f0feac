//! Simulation harness: non-stationary environments, the batched experiment
//! loop, per-update metrics, and bootstrap aggregation over repeated runs.
//!
//! Runs are fully deterministic: every random stream (true rates, batch
//! outcomes, posterior draws, bootstrap resamples) is seeded by name and
//! index from one base seed, so runs can execute in any order or in
//! parallel and still reproduce byte-identical results.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::agent::{agent_update, AgentSnapshot, AllocationPlan};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exec;
use crate::policy::PolicyKind;
use crate::seed::derive_seed;
use crate::window::{ArmBatch, BatchStats};
use crate::hypothesis::TestDecision;

/// Environment regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// True rates fixed for the whole run.
    Stationary,
    /// True rates permuted once at `change_update`.
    Abrupt,
    /// True rates drift linearly from initial draws to a permuted target.
    Gradual,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Stationary => "stationary",
            ScenarioKind::Abrupt => "abrupt",
            ScenarioKind::Gradual => "gradual",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "stationary" => Ok(ScenarioKind::Stationary),
            "abrupt" => Ok(ScenarioKind::Abrupt),
            "gradual" => Ok(ScenarioKind::Gradual),
            other => Err(Error::config(format!(
                "unknown scenario {other:?}; expected stationary, abrupt, or gradual"
            ))),
        }
    }
}

/// Full description of a simulated environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_arms: usize,
    /// Beta shape pair from which initial true rates are drawn.
    pub reward_prior: (f64, f64),
    /// Total updates per run.
    pub updates: u64,
    /// Update at which the abrupt permutation takes effect (ignored by the
    /// other scenarios).
    pub change_update: u64,
}

impl ScenarioSpec {
    /// Benchmark defaults for a scenario kind: 5 arms, Beta(3, 80) reward
    /// prior, 200 updates (300 for gradual drift), change at update 100.
    pub fn for_kind(kind: ScenarioKind) -> Self {
        ScenarioSpec {
            kind,
            n_arms: 5,
            reward_prior: (3.0, 80.0),
            updates: match kind {
                ScenarioKind::Gradual => 300,
                _ => 200,
            },
            change_update: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_arms < 2 {
            return Err(Error::config(format!(
                "scenario needs at least 2 arms, got {}",
                self.n_arms
            )));
        }
        if self.updates < 1 {
            return Err(Error::config("scenario needs at least 1 update"));
        }
        let (a, b) = self.reward_prior;
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::config(format!(
                "reward prior shapes must be positive and finite, got ({a}, {b})"
            )));
        }
        if self.kind == ScenarioKind::Abrupt && self.change_update >= self.updates {
            return Err(Error::config(format!(
                "abrupt change at update {} must precede the last update {}",
                self.change_update,
                self.updates - 1
            )));
        }
        Ok(())
    }
}

/// Initial rates and their non-identity permutation for one run, both drawn
/// from the run's rate stream.
fn rate_endpoints(spec: &ScenarioSpec, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "rates", 0));
    let beta = Beta::new(spec.reward_prior.0, spec.reward_prior.1)
        .expect("validated reward prior shapes");
    let initial: Vec<f64> = (0..spec.n_arms).map(|_| beta.sample(&mut rng)).collect();
    let mut perm: Vec<usize> = (0..spec.n_arms).collect();
    // An identity shuffle would silently turn a change scenario into a
    // stationary one, so redraw until the permutation moves something.
    loop {
        perm.shuffle(&mut rng);
        if perm.iter().enumerate().any(|(i, &p)| i != p) {
            break;
        }
    }
    let target = perm.iter().map(|&p| initial[p]).collect();
    (initial, target)
}

/// True success rates at one update of a run.
///
/// Stationary runs keep the initial draws; abrupt runs switch to the
/// permuted vector at `change_update`; gradual runs interpolate linearly
/// from the initial draws (update 0) to the permuted target (last update).
pub fn true_rates(spec: &ScenarioSpec, update: u64, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if update >= spec.updates {
        return Err(Error::contract(format!(
            "update {update} out of range for a {}-update scenario",
            spec.updates
        )));
    }
    let (initial, target) = rate_endpoints(spec, seed);
    Ok(match spec.kind {
        ScenarioKind::Stationary => initial,
        ScenarioKind::Abrupt => {
            if update < spec.change_update {
                initial
            } else {
                target
            }
        }
        ScenarioKind::Gradual => {
            let t = if spec.updates > 1 {
                update as f64 / (spec.updates - 1) as f64
            } else {
                0.0
            };
            initial
                .iter()
                .zip(&target)
                .map(|(a, b)| a * (1.0 - t) + b * t)
                .collect()
        }
    })
}

/// Simulates one batch: every unit is assigned multinomially by the plan's
/// shares, then each arm's successes are drawn binomially at its true rate.
pub fn step_environment(
    rates: &[f64],
    plan: &AllocationPlan,
    batch_size: u64,
    update_index: u64,
    seed: u64,
) -> Result<BatchStats> {
    plan.validate()?;
    if rates.len() != plan.shares.len() {
        return Err(Error::contract(format!(
            "{} rates for {} plan shares",
            rates.len(),
            plan.shares.len()
        )));
    }
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::contract("true rates must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fallback = plan
        .shares
        .iter()
        .rposition(|&s| s > 0.0)
        .expect("validated plan has positive total share");
    let mut assignments = vec![0u64; rates.len()];
    for _ in 0..batch_size {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = fallback;
        for (arm, &share) in plan.shares.iter().enumerate() {
            acc += share;
            if u < acc {
                chosen = arm;
                break;
            }
        }
        assignments[chosen] += 1;
    }
    let per_arm = assignments
        .iter()
        .zip(rates)
        .map(|(&n, &r)| {
            let successes = if n == 0 {
                0
            } else {
                Binomial::new(n, r)
                    .expect("rate validated in [0, 1]")
                    .sample(&mut rng)
            };
            ArmBatch {
                assignments: n,
                successes,
            }
        })
        .collect();
    Ok(BatchStats {
        update_index,
        per_arm,
    })
}

/// Expected regret of allocating one batch by `plan` under `rates`:
/// `batch_size * (max rate - sum share_a * rate_a)`.
pub fn regret_for_update(rates: &[f64], plan: &AllocationPlan, batch_size: u64) -> Result<f64> {
    plan.validate()?;
    if rates.len() != plan.shares.len() {
        return Err(Error::contract(format!(
            "{} rates for {} plan shares",
            rates.len(),
            plan.shares.len()
        )));
    }
    let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let expected: f64 = rates
        .iter()
        .zip(&plan.shares)
        .map(|(r, s)| r * s)
        .sum();
    Ok((batch_size as f64 * (best - expected)).max(0.0))
}

/// Regret actually incurred by the realised assignment counts of a batch:
/// `sum_a assignments_a * (max rate - rate_a)`.
pub fn realised_regret(rates: &[f64], batch: &BatchStats) -> f64 {
    let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    batch
        .per_arm
        .iter()
        .zip(rates)
        .map(|(counts, &r)| counts.assignments as f64 * (best - r))
        .sum()
}

/// Per-update metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run: u64,
    pub update: u64,
    pub share_planned: Vec<f64>,
    pub share_realised: Vec<f64>,
    pub assignments: Vec<u64>,
    pub successes: Vec<u64>,
    pub memory_len: usize,
    /// Expected regret of this update's plan.
    pub regret: f64,
    /// Regret of this update's realised assignments.
    pub regret_realised: f64,
    pub cum_regret: f64,
    pub cum_regret_realised: f64,
    /// Total absolute band-index movement across pairs since the previous
    /// update; pairs without evidence on either side contribute 0.
    pub band_movement: u64,
    pub cum_band_movement: u64,
}

/// Per-update pairwise evidence of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub run: u64,
    pub update: u64,
    pub arm_lo: usize,
    pub arm_hi: usize,
    pub bayes_factor: Option<f64>,
    pub band: Option<i32>,
    pub decision: TestDecision,
}

/// Everything a simulation emits, ordered by (run, update, pair).
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub metrics: Vec<MetricsRow>,
    pub pairs: Vec<PairRow>,
}

/// Runs `runs` independent repetitions of the scenario under one policy.
/// Each run is seeded from `(base_seed, run index)`; rows are returned
/// sorted by run then update.  Any failing run aborts the invocation.
pub fn run_scenario(
    spec: &ScenarioSpec,
    policy: PolicyKind,
    config: &ExperimentConfig,
    runs: usize,
    base_seed: u64,
) -> Result<SimOutput> {
    spec.validate()?;
    config.validate()?;
    if runs < 1 {
        return Err(Error::config("need at least 1 run"));
    }
    if spec.n_arms != config.n_arms {
        return Err(Error::contract(format!(
            "scenario has {} arms but config has {}",
            spec.n_arms, config.n_arms
        )));
    }
    let per_run: Vec<Result<(Vec<MetricsRow>, Vec<PairRow>)>> = exec::map_indexed(runs, |r| {
        simulate_run(
            spec,
            policy,
            config,
            r as u64,
            derive_seed(base_seed, "run", r as u64),
        )
    });
    let mut out = SimOutput {
        metrics: Vec::with_capacity(runs * spec.updates as usize),
        pairs: Vec::new(),
    };
    for run in per_run {
        let (metrics, pairs) = run?;
        out.metrics.extend(metrics);
        out.pairs.extend(pairs);
    }
    Ok(out)
}

fn simulate_run(
    spec: &ScenarioSpec,
    policy: PolicyKind,
    config: &ExperimentConfig,
    run: u64,
    run_seed: u64,
) -> Result<(Vec<MetricsRow>, Vec<PairRow>)> {
    let mut snapshot = AgentSnapshot::new(config, derive_seed(run_seed, "agent", 0))?;
    let mut metrics = Vec::with_capacity(spec.updates as usize);
    let mut pairs = Vec::new();
    let mut cum_regret = 0.0;
    let mut cum_regret_realised = 0.0;
    let mut cum_band_movement = 0u64;
    let mut prev_bands: Option<Vec<Option<i32>>> = None;
    for update in 0..spec.updates {
        let rates = true_rates(spec, update, run_seed)?;
        let plan = snapshot.plan.clone();
        let batch = step_environment(
            &rates,
            &plan,
            config.batch_size,
            update,
            derive_seed(run_seed, "env", update),
        )?;
        let regret = regret_for_update(&rates, &plan, config.batch_size)?;
        let regret_real = realised_regret(&rates, &batch);
        let assignments: Vec<u64> = batch.per_arm.iter().map(|a| a.assignments).collect();
        let successes: Vec<u64> = batch.per_arm.iter().map(|a| a.successes).collect();
        snapshot = agent_update(&snapshot, batch, config, policy)?;

        let bands: Vec<Option<i32>> = snapshot
            .tests
            .iter()
            .map(|t| t.evidence.map(|e| e.band))
            .collect();
        let band_movement = match &prev_bands {
            None => 0,
            Some(prev) => prev
                .iter()
                .zip(&bands)
                .map(|(a, b)| match (a, b) {
                    (Some(x), Some(y)) => (x - y).unsigned_abs() as u64,
                    _ => 0,
                })
                .sum(),
        };
        cum_regret += regret;
        cum_regret_realised += regret_real;
        cum_band_movement += band_movement;

        for t in &snapshot.tests {
            pairs.push(PairRow {
                run,
                update,
                arm_lo: t.arm_lo,
                arm_hi: t.arm_hi,
                bayes_factor: t.evidence.map(|e| e.bayes_factor),
                band: t.evidence.map(|e| e.band),
                decision: t.decision,
            });
        }
        metrics.push(MetricsRow {
            run,
            update,
            share_planned: plan.shares,
            share_realised: assignments
                .iter()
                .map(|&n| n as f64 / config.batch_size as f64)
                .collect(),
            assignments,
            successes,
            memory_len: snapshot.memory.len(),
            regret,
            regret_realised: regret_real,
            cum_regret,
            cum_regret_realised,
            band_movement,
            cum_band_movement,
        });
        prev_bands = Some(bands);
    }
    Ok((metrics, pairs))
}

/// Mean and 95% bootstrap interval per update for one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCi {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Aggregated series over runs for every emitted metric, keyed by metric
/// name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub runs: usize,
    pub updates: usize,
    pub series: BTreeMap<String, SeriesCi>,
}

/// Names and extractors of the per-update scalar metrics, in emission
/// order.
fn metric_extractors(n_arms: usize) -> Vec<(String, Box<dyn Fn(&MetricsRow) -> f64 + Sync>)> {
    let mut out: Vec<(String, Box<dyn Fn(&MetricsRow) -> f64 + Sync>)> = Vec::new();
    for arm in 0..n_arms {
        out.push((
            format!("share_planned_arm_{arm}"),
            Box::new(move |r: &MetricsRow| r.share_planned[arm]),
        ));
        out.push((
            format!("share_realised_arm_{arm}"),
            Box::new(move |r: &MetricsRow| r.share_realised[arm]),
        ));
    }
    out.push((
        "memory_len".into(),
        Box::new(|r: &MetricsRow| r.memory_len as f64),
    ));
    out.push(("regret".into(), Box::new(|r: &MetricsRow| r.regret)));
    out.push(("cum_regret".into(), Box::new(|r: &MetricsRow| r.cum_regret)));
    out.push((
        "cum_regret_realised".into(),
        Box::new(|r: &MetricsRow| r.cum_regret_realised),
    ));
    out.push((
        "band_movement".into(),
        Box::new(|r: &MetricsRow| r.band_movement as f64),
    ));
    out.push((
        "cum_band_movement".into(),
        Box::new(|r: &MetricsRow| r.cum_band_movement as f64),
    ));
    out
}

/// Linear-interpolation percentile of an ascending-sorted sample
/// (`h = (n-1) p`, interpolating between the bracketing order statistics).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Per-update mean and percentile-bootstrap 95% interval over runs for
/// every metric.  Resample `b` draws its run indices from the stream
/// `(seed, "resample", b)`, and one index vector is shared by all metrics,
/// so whole runs are resampled coherently.
pub fn bootstrap_series(
    rows: &[MetricsRow],
    resamples: usize,
    seed: u64,
) -> Result<AggregateSeries> {
    if resamples < 100 {
        return Err(Error::contract(format!(
            "bootstrap needs at least 100 resamples, got {resamples}"
        )));
    }
    if rows.is_empty() {
        return Err(Error::insufficient("no metric rows to aggregate"));
    }
    let mut run_ids: Vec<u64> = rows.iter().map(|r| r.run).collect();
    run_ids.sort_unstable();
    run_ids.dedup();
    let n_runs = run_ids.len();
    if n_runs < 2 {
        return Err(Error::insufficient(
            "bootstrap needs at least 2 runs to resample",
        ));
    }
    let updates = rows.iter().map(|r| r.update).max().unwrap() as usize + 1;
    if rows.len() != n_runs * updates {
        return Err(Error::contract(format!(
            "expected a complete grid of {} runs x {} updates, got {} rows",
            n_runs,
            updates,
            rows.len()
        )));
    }
    let n_arms = rows[0].share_planned.len();
    let extractors = metric_extractors(n_arms);

    // values[metric][run][update]
    let run_slot: BTreeMap<u64, usize> = run_ids.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let mut values = vec![vec![vec![f64::NAN; updates]; n_runs]; extractors.len()];
    for row in rows {
        let slot = run_slot[&row.run];
        for (m, (_, f)) in extractors.iter().enumerate() {
            values[m][slot][row.update as usize] = f(row);
        }
    }

    let means: Vec<Vec<f64>> = values
        .iter()
        .map(|per_run| {
            (0..updates)
                .map(|u| per_run.iter().map(|r| r[u]).sum::<f64>() / n_runs as f64)
                .collect()
        })
        .collect();

    // resample_means[b][metric][update]
    let resample_means: Vec<Vec<Vec<f64>>> = exec::map_indexed(resamples, |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "resample", b as u64));
        let picks: Vec<usize> = (0..n_runs).map(|_| rng.random_range(0..n_runs)).collect();
        values
            .iter()
            .map(|per_run| {
                (0..updates)
                    .map(|u| picks.iter().map(|&p| per_run[p][u]).sum::<f64>() / n_runs as f64)
                    .collect()
            })
            .collect()
    });

    let mut series = BTreeMap::new();
    for (m, (name, _)) in extractors.iter().enumerate() {
        let mut lower = Vec::with_capacity(updates);
        let mut upper = Vec::with_capacity(updates);
        let mut sample = vec![0.0; resamples];
        for u in 0..updates {
            for (b, slot) in sample.iter_mut().enumerate() {
                *slot = resample_means[b][m][u];
            }
            sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lower.push(percentile(&sample, 0.025));
            upper.push(percentile(&sample, 0.975));
        }
        series.insert(
            name.clone(),
            SeriesCi {
                mean: means[m].clone(),
                lower,
                upper,
            },
        );
    }
    Ok(AggregateSeries {
        runs: n_runs,
        updates,
        series,
    })
}

/// One row of the detection-threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub policy: String,
    pub threshold: f64,
    pub cum_regret_mean: f64,
    pub cum_regret_lower: f64,
    pub cum_regret_upper: f64,
    pub cum_band_movement_mean: f64,
    pub cum_band_movement_lower: f64,
    pub cum_band_movement_upper: f64,
}

/// Final cumulative regret and band movement of the two adaptive policies
/// across detection thresholds, with percentile-bootstrap 95% intervals
/// over run finals.  One row per (threshold, policy), thresholds outermost.
pub fn threshold_sweep(
    spec: &ScenarioSpec,
    thresholds: &[f64],
    config: &ExperimentConfig,
    runs: usize,
    base_seed: u64,
    resamples: usize,
) -> Result<Vec<SweepRow>> {
    if thresholds.is_empty() {
        return Err(Error::config("sweep needs at least one threshold"));
    }
    let mut out = Vec::with_capacity(thresholds.len() * 2);
    for (ti, &threshold) in thresholds.iter().enumerate() {
        for (pi, policy) in [PolicyKind::BayesWin, PolicyKind::Adwin].iter().enumerate() {
            let cell = (ti * 2 + pi) as u64;
            let mut cell_config = config.clone();
            cell_config.detection_threshold = threshold;
            let sim = run_scenario(spec, *policy, &cell_config, runs, base_seed)?;
            let finals: Vec<&MetricsRow> = sim
                .metrics
                .iter()
                .filter(|r| r.update == spec.updates - 1)
                .collect();
            let regrets: Vec<f64> = finals.iter().map(|r| r.cum_regret).collect();
            let movements: Vec<f64> = finals.iter().map(|r| r.cum_band_movement as f64).collect();
            let boot_seed = derive_seed(base_seed, "sweep_boot", cell);
            let (rm, rl, ru) = final_interval(&regrets, resamples, boot_seed)?;
            let (mm, ml, mu) = final_interval(&movements, resamples, derive_seed(boot_seed, "movement", 0))?;
            out.push(SweepRow {
                scenario: spec.kind.as_str().to_string(),
                policy: policy.name().to_string(),
                threshold,
                cum_regret_mean: rm,
                cum_regret_lower: rl,
                cum_regret_upper: ru,
                cum_band_movement_mean: mm,
                cum_band_movement_lower: ml,
                cum_band_movement_upper: mu,
            });
        }
    }
    Ok(out)
}

/// Mean and bootstrap 95% interval of one per-run final value.
pub fn final_interval(finals: &[f64], resamples: usize, seed: u64) -> Result<(f64, f64, f64)> {
    let n = finals.len();
    if n < 2 {
        return Err(Error::insufficient(
            "bootstrap needs at least 2 runs to resample",
        ));
    }
    let mean = finals.iter().sum::<f64>() / n as f64;
    let mut sample: Vec<f64> = (0..resamples)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "resample", b as u64));
            (0..n).map(|_| finals[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((mean, percentile(&sample, 0.025), percentile(&sample, 0.975)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abrupt_spec() -> ScenarioSpec {
        ScenarioSpec::for_kind(ScenarioKind::Abrupt)
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            allocation_samples: 2000,
            batch_size: 200,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn scenario_defaults_follow_the_benchmark_protocol() {
        let s = abrupt_spec();
        assert_eq!((s.n_arms, s.updates, s.change_update), (5, 200, 100));
        assert_eq!(s.reward_prior, (3.0, 80.0));
        assert_eq!(ScenarioSpec::for_kind(ScenarioKind::Gradual).updates, 300);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn scenario_rejects_change_after_end() {
        let mut s = abrupt_spec();
        s.change_update = 200;
        assert!(s.validate().is_err());
        s.kind = ScenarioKind::Stationary;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn abrupt_rates_permute_at_the_change() {
        let spec = abrupt_spec();
        for seed in [1u64, 2, 3, 4, 5] {
            let before = true_rates(&spec, spec.change_update - 1, seed).unwrap();
            let after = true_rates(&spec, spec.change_update, seed).unwrap();
            let mut a = before.clone();
            let mut b = after.clone();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(a, b, "multiset of rates must be preserved");
            assert_ne!(before, after, "permutation must move at least one arm");
            // Stationary within each regime.
            assert_eq!(before, true_rates(&spec, 0, seed).unwrap());
            assert_eq!(after, true_rates(&spec, spec.updates - 1, seed).unwrap());
        }
    }

    #[test]
    fn gradual_rates_interpolate_between_endpoints() {
        let mut spec = ScenarioSpec::for_kind(ScenarioKind::Gradual);
        spec.updates = 301; // odd midpoint lands exactly on t = 0.5
        let start = true_rates(&spec, 0, 9).unwrap();
        let end = true_rates(&spec, 300, 9).unwrap();
        let mid = true_rates(&spec, 150, 9).unwrap();
        let mut sorted_start = start.clone();
        let mut sorted_end = end.clone();
        sorted_start.sort_by(|x, y| x.partial_cmp(y).unwrap());
        sorted_end.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert_eq!(sorted_start, sorted_end);
        for a in 0..spec.n_arms {
            assert!((mid[a] - 0.5 * (start[a] + end[a])).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_rates_never_move() {
        let spec = ScenarioSpec::for_kind(ScenarioKind::Stationary);
        let first = true_rates(&spec, 0, 11).unwrap();
        for u in [1, 50, 199] {
            assert_eq!(first, true_rates(&spec, u, 11).unwrap());
        }
    }

    #[test]
    fn rates_out_of_range_update_is_an_error() {
        let spec = abrupt_spec();
        assert!(true_rates(&spec, 200, 1).is_err());
    }

    #[test]
    fn environment_respects_degenerate_rates() {
        let plan = AllocationPlan { shares: vec![1.0] };
        let zero = step_environment(&[0.0], &plan, 500, 0, 42).unwrap();
        assert_eq!(zero.per_arm[0].assignments, 500);
        assert_eq!(zero.per_arm[0].successes, 0);
        let one = step_environment(&[1.0], &plan, 500, 0, 42).unwrap();
        assert_eq!(one.per_arm[0].successes, 500);
    }

    #[test]
    fn environment_assigns_every_unit() {
        let plan = AllocationPlan {
            shares: vec![0.2, 0.3, 0.5],
        };
        let batch = step_environment(&[0.1, 0.2, 0.3], &plan, 1000, 3, 7).unwrap();
        assert_eq!(batch.total_assignments(), 1000);
        assert_eq!(batch.update_index, 3);
    }

    #[test]
    fn environment_success_means_match_rates() {
        // Monte-Carlo oracle: mean successes over many seeded batches should
        // approach batch * share * rate for each arm.
        let plan = AllocationPlan {
            shares: vec![0.5, 0.5],
        };
        let rates = [0.03, 0.06];
        let n = 2000;
        let mut totals = [0.0f64; 2];
        for seed in 0..n {
            let b = step_environment(&rates, &plan, 1000, 0, seed).unwrap();
            totals[0] += b.per_arm[0].successes as f64;
            totals[1] += b.per_arm[1].successes as f64;
        }
        // Standard error of the mean success count is well under 0.1 at
        // this replication count; 3 standard errors of slack.
        let se0 = (500.0f64 * 0.03 * 0.97 / n as f64).sqrt() * 3.0 + 0.25;
        let se1 = (500.0f64 * 0.06 * 0.94 / n as f64).sqrt() * 3.0 + 0.25;
        assert!((totals[0] / n as f64 - 15.0).abs() < se0);
        assert!((totals[1] / n as f64 - 30.0).abs() < se1);
    }

    #[test]
    fn regret_examples() {
        let plan = AllocationPlan {
            shares: vec![0.5, 0.5],
        };
        let r = regret_for_update(&[0.03, 0.06], &plan, 1000).unwrap();
        assert!((r - 15.0).abs() < 1e-9);
        let all_best = AllocationPlan {
            shares: vec![0.0, 1.0],
        };
        assert_eq!(regret_for_update(&[0.03, 0.06], &all_best, 1000).unwrap(), 0.0);
        let equal = regret_for_update(&[0.05, 0.05], &plan, 1000).unwrap();
        assert!(equal.abs() < 1e-12);
    }

    #[test]
    fn realised_regret_counts_actual_assignments() {
        let batch = BatchStats {
            update_index: 0,
            per_arm: vec![
                ArmBatch { assignments: 400, successes: 10 },
                ArmBatch { assignments: 600, successes: 30 },
            ],
        };
        let r = realised_regret(&[0.03, 0.06], &batch);
        assert!((r - 400.0 * 0.03).abs() < 1e-9);
    }

    #[test]
    fn run_scenario_shapes_and_monotone_cumulatives() {
        let mut spec = abrupt_spec();
        spec.updates = 3;
        spec.change_update = 1;
        let out = run_scenario(&spec, PolicyKind::BayesWin, &small_config(), 1, 5).unwrap();
        assert_eq!(out.metrics.len(), 3);
        let updates: Vec<u64> = out.metrics.iter().map(|r| r.update).collect();
        assert_eq!(updates, vec![0, 1, 2]);
        assert_eq!(out.pairs.len(), 3 * 10);
        assert_eq!(out.metrics[0].band_movement, 0);
        for w in out.metrics.windows(2) {
            assert!(w[1].cum_regret >= w[0].cum_regret);
            assert!(w[1].cum_band_movement >= w[0].cum_band_movement);
        }
        for row in &out.metrics {
            assert_eq!(row.assignments.iter().sum::<u64>(), 200);
            assert!(row.regret >= 0.0);
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_rows() {
        let mut spec = abrupt_spec();
        spec.updates = 6;
        spec.change_update = 3;
        let a = run_scenario(&spec, PolicyKind::Adwin, &small_config(), 2, 77).unwrap();
        let b = run_scenario(&spec, PolicyKind::Adwin, &small_config(), 2, 77).unwrap();
        assert_eq!(a, b);
        let c = run_scenario(&spec, PolicyKind::Adwin, &small_config(), 2, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mismatched_arm_counts_are_rejected() {
        let mut spec = abrupt_spec();
        spec.n_arms = 3;
        let err = run_scenario(&spec, PolicyKind::BayesWin, &small_config(), 1, 5);
        assert!(err.is_err());
    }

    fn rows_for_bootstrap(values: &[&[f64]]) -> Vec<MetricsRow> {
        // One metric row per (run, update) with cum_regret carrying the
        // value under test and everything else neutral.
        let mut rows = Vec::new();
        for (run, series) in values.iter().enumerate() {
            for (update, &v) in series.iter().enumerate() {
                rows.push(MetricsRow {
                    run: run as u64,
                    update: update as u64,
                    share_planned: vec![0.5, 0.5],
                    share_realised: vec![0.5, 0.5],
                    assignments: vec![100, 100],
                    successes: vec![5, 5],
                    memory_len: 2,
                    regret: v,
                    regret_realised: v,
                    cum_regret: v,
                    cum_regret_realised: v,
                    band_movement: 0,
                    cum_band_movement: 0,
                });
            }
        }
        rows
    }

    #[test]
    fn degenerate_bootstrap_has_zero_width() {
        let rows = rows_for_bootstrap(&[&[3.0, 4.0], &[3.0, 4.0], &[3.0, 4.0]]);
        let agg = bootstrap_series(&rows, 200, 1).unwrap();
        let s = &agg.series["cum_regret"];
        assert_eq!(s.mean, vec![3.0, 4.0]);
        assert_eq!(s.lower, s.mean);
        assert_eq!(s.upper, s.mean);
    }

    #[test]
    fn bootstrap_bounds_contain_the_mean_and_stay_in_range() {
        let rows = rows_for_bootstrap(&[&[0.0], &[10.0]]);
        let agg = bootstrap_series(&rows, 500, 9).unwrap();
        let s = &agg.series["cum_regret"];
        assert!((s.mean[0] - 5.0).abs() < 1e-12);
        assert!(s.lower[0] >= 0.0 && s.upper[0] <= 10.0);
        assert!(s.lower[0] <= s.mean[0] && s.mean[0] <= s.upper[0]);
    }

    #[test]
    fn bootstrap_requires_two_runs_and_enough_resamples() {
        let rows = rows_for_bootstrap(&[&[1.0, 2.0]]);
        assert!(matches!(
            bootstrap_series(&rows, 200, 1),
            Err(Error::InsufficientData(_))
        ));
        let rows = rows_for_bootstrap(&[&[1.0], &[2.0]]);
        assert!(bootstrap_series(&rows, 99, 1).is_err());
    }

    #[test]
    fn bootstrap_covers_every_metric() {
        let rows = rows_for_bootstrap(&[&[1.0], &[2.0], &[3.0]]);
        let agg = bootstrap_series(&rows, 100, 4).unwrap();
        for key in [
            "share_planned_arm_0",
            "share_realised_arm_1",
            "memory_len",
            "regret",
            "cum_regret",
            "cum_regret_realised",
            "band_movement",
            "cum_band_movement",
        ] {
            assert!(agg.series.contains_key(key), "missing series {key}");
        }
        assert_eq!(agg.runs, 3);
        assert_eq!(agg.updates, 1);
    }

    #[test]
    fn percentile_interpolates_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert!((percentile(&v, 0.5) - 2.5).abs() < 1e-12);
        assert!((percentile(&v, 1.0 / 3.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_emits_one_row_per_threshold_and_policy() {
        let mut spec = abrupt_spec();
        spec.updates = 4;
        spec.change_update = 2;
        let rows = threshold_sweep(&spec, &[0.05, 0.1], &small_config(), 2, 21, 100).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].policy, "bayeswin");
        assert_eq!(rows[1].policy, "adwin");
        assert_eq!(rows[0].threshold, 0.05);
        assert_eq!(rows[3].threshold, 0.1);
        for r in &rows {
            assert!(r.cum_regret_lower <= r.cum_regret_mean + 1e-12);
            assert!(r.cum_regret_mean <= r.cum_regret_upper + 1e-12);
        }
    }
}
