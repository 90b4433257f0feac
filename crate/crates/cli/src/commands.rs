//! The three subcommands: simulate, sweep, and report.
//!
//! All heavy computation happens before any file is created; writes go
//! through [`ArtifactDir`] so a failure part-way leaves no partial output.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use banditwin::seed::derive_seed;
use banditwin::sim::{
    bootstrap_series, final_interval, run_scenario, threshold_sweep, AggregateSeries, MetricsRow,
    SimOutput, SweepRow,
};
use banditwin::{Error, Result};

use crate::cli::ReportOpts;
use crate::config::RunConfig;
use crate::output::{csv_table, fmt_sig, ArtifactDir};

const METRICS_COLUMNS: [&str; 12] = [
    "run",
    "update",
    "arm",
    "share_planned",
    "share_realised",
    "assignments",
    "successes",
    "memory_len",
    "regret",
    "cum_regret",
    "band_movement",
    "cum_band_movement",
];

const PAIRS_COLUMNS: [&str; 7] = [
    "run",
    "update",
    "arm_lo",
    "arm_hi",
    "bayes_factor",
    "band",
    "decision",
];

const SWEEP_COLUMNS: [&str; 9] = [
    "scenario",
    "policy",
    "threshold",
    "cum_regret_mean",
    "cum_regret_lower",
    "cum_regret_upper",
    "cum_band_movement_mean",
    "cum_band_movement_lower",
    "cum_band_movement_upper",
];

/// Relative tolerance when report checks a stored aggregate.json: CSV
/// rounds to 12 significant digits, so recomputed values can drift by
/// about 1e-12 but never this much.
const AGGREGATE_TOLERANCE: f64 = 1e-9;

pub fn cmd_simulate(mut cfg: RunConfig) -> Result<()> {
    cfg.command = "simulate".into();
    let policy = cfg.simulate_policy()?;
    let sim = run_scenario(
        &cfg.scenario,
        policy,
        &cfg.experiment,
        cfg.runs,
        cfg.base_seed,
    )?;
    let aggregate = bootstrap_series(&sim.metrics, cfg.resamples, cfg.bootstrap_seed())?;

    let metrics_csv = metrics_to_csv(&sim);
    let pairs_csv = pairs_to_csv(&sim);
    let aggregate_json = to_pretty_json(&aggregate)?;
    let manifest_json = to_pretty_json(&cfg)?;

    let mut dir = ArtifactDir::create(&cfg.out)?;
    let written = (|| {
        dir.write("metrics.csv", &metrics_csv)?;
        dir.write("pairs.csv", &pairs_csv)?;
        dir.write("aggregate.json", &aggregate_json)?;
        dir.write("manifest.json", &manifest_json)
    })();
    if written.is_err() {
        dir.discard();
        return written;
    }
    println!(
        "wrote {} to {}",
        dir.written_names().join(", "),
        cfg.out.display()
    );
    Ok(())
}

pub fn cmd_sweep(mut cfg: RunConfig) -> Result<()> {
    cfg.sweep_policies()?;
    cfg.command = "sweep".into();
    cfg.policies = vec!["bayeswin".into(), "adwin".into()];
    let rows = threshold_sweep(
        &cfg.scenario,
        &cfg.thresholds,
        &cfg.experiment,
        cfg.runs,
        cfg.base_seed,
        cfg.resamples,
    )?;
    let sweep_csv = sweep_to_csv(&rows);
    let manifest_json = to_pretty_json(&cfg)?;

    let mut dir = ArtifactDir::create(&cfg.out)?;
    let written = (|| {
        dir.write("sweep.csv", &sweep_csv)?;
        dir.write("manifest.json", &manifest_json)
    })();
    if written.is_err() {
        dir.discard();
        return written;
    }
    println!(
        "wrote {} to {}",
        dir.written_names().join(", "),
        cfg.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct FinalStat {
    mean: f64,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Serialize)]
struct AggregateCheck {
    compared: bool,
    max_rel_diff: Option<f64>,
    within_tolerance: Option<bool>,
}

#[derive(Debug, Serialize)]
struct Report {
    scenario: Option<String>,
    policy: Option<String>,
    runs: usize,
    updates: usize,
    arms: usize,
    final_cum_regret: FinalStat,
    final_cum_band_movement: FinalStat,
    aggregate_check: AggregateCheck,
    aggregate: AggregateSeries,
}

pub fn cmd_report(opts: &ReportOpts) -> Result<()> {
    let text = std::fs::read_to_string(&opts.metrics)
        .map_err(|e| Error::contract(format!("cannot read {}: {e}", opts.metrics.display())))?;
    let rows = parse_metrics_csv(&text)?;
    let arms = rows[0].share_planned.len();

    // The sibling manifest pins the bootstrap stream so the recomputation
    // is exactly the one simulate performed; without it, documented
    // defaults apply and stored aggregates are simply not compared.
    let input_dir = opts
        .metrics
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let manifest: Option<RunConfig> = std::fs::read_to_string(input_dir.join("manifest.json"))
        .ok()
        .map(|s| {
            serde_json::from_str(&s)
                .map_err(|e| Error::contract(format!("manifest.json: {e}")))
        })
        .transpose()?;
    let resamples = manifest.as_ref().map_or(1000, |m| m.resamples);
    let boot_seed = manifest
        .as_ref()
        .map_or_else(|| derive_seed(0, "bootstrap", 0), |m| m.bootstrap_seed());

    let mut aggregate = bootstrap_series(&rows, resamples, boot_seed)?;
    // Realised-regret accumulations are not part of the CSV schema, so the
    // reconstruction cannot supply them.
    aggregate.series.remove("cum_regret_realised");

    let check = match std::fs::read_to_string(input_dir.join("aggregate.json")) {
        Ok(stored) => {
            let stored: AggregateSeries = serde_json::from_str(&stored)
                .map_err(|e| Error::contract(format!("aggregate.json: {e}")))?;
            let diff = max_relative_difference(&aggregate, &stored);
            let ok = diff <= AGGREGATE_TOLERANCE;
            if !ok {
                eprintln!(
                    "warning: aggregate.json differs from recomputation by relative {diff:e} (tolerance {AGGREGATE_TOLERANCE:e})"
                );
            }
            AggregateCheck {
                compared: true,
                max_rel_diff: Some(diff),
                within_tolerance: Some(ok),
            }
        }
        Err(_) => AggregateCheck {
            compared: false,
            max_rel_diff: None,
            within_tolerance: None,
        },
    };

    let last_update = aggregate.updates as u64 - 1;
    let finals_of = |f: &dyn Fn(&MetricsRow) -> f64| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.update == last_update)
            .map(|r| f(r))
            .collect()
    };
    let regret_finals = finals_of(&|r| r.cum_regret);
    let movement_finals = finals_of(&|r| r.cum_band_movement as f64);
    let (rm, rl, ru) = final_interval(
        &regret_finals,
        resamples,
        derive_seed(boot_seed, "finals", 0),
    )?;
    let (mm, ml, mu) = final_interval(
        &movement_finals,
        resamples,
        derive_seed(boot_seed, "finals", 1),
    )?;

    let report = Report {
        scenario: manifest
            .as_ref()
            .map(|m| m.scenario.kind.as_str().to_string()),
        policy: manifest.as_ref().and_then(|m| match m.policies.as_slice() {
            [one] => Some(one.clone()),
            _ => None,
        }),
        runs: aggregate.runs,
        updates: aggregate.updates,
        arms,
        final_cum_regret: FinalStat {
            mean: rm,
            lower: rl,
            upper: ru,
        },
        final_cum_band_movement: FinalStat {
            mean: mm,
            lower: ml,
            upper: mu,
        },
        aggregate_check: check,
        aggregate,
    };
    let report_json = to_pretty_json(&report)?;

    let out_dir = opts.out.clone().unwrap_or(input_dir);
    let mut dir = ArtifactDir::create(&out_dir)?;
    let written = dir.write("report.json", &report_json);
    if written.is_err() {
        dir.discard();
        return written;
    }
    println!("wrote report.json to {}", out_dir.display());
    Ok(())
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::contract(format!("serialisation failed: {e}")))
}

fn metrics_to_csv(sim: &SimOutput) -> String {
    let mut rows = Vec::new();
    for m in &sim.metrics {
        for arm in 0..m.share_planned.len() {
            rows.push(vec![
                m.run.to_string(),
                m.update.to_string(),
                arm.to_string(),
                fmt_sig(m.share_planned[arm]),
                fmt_sig(m.share_realised[arm]),
                m.assignments[arm].to_string(),
                m.successes[arm].to_string(),
                m.memory_len.to_string(),
                fmt_sig(m.regret),
                fmt_sig(m.cum_regret),
                m.band_movement.to_string(),
                m.cum_band_movement.to_string(),
            ]);
        }
    }
    csv_table(&METRICS_COLUMNS, &rows)
}

fn pairs_to_csv(sim: &SimOutput) -> String {
    let rows = sim
        .pairs
        .iter()
        .map(|p| {
            vec![
                p.run.to_string(),
                p.update.to_string(),
                p.arm_lo.to_string(),
                p.arm_hi.to_string(),
                p.bayes_factor.map(fmt_sig).unwrap_or_default(),
                p.band.map(|b| b.to_string()).unwrap_or_default(),
                p.decision.as_str().to_string(),
            ]
        })
        .collect::<Vec<_>>();
    csv_table(&PAIRS_COLUMNS, &rows)
}

fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let cells = rows
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.policy.clone(),
                fmt_sig(r.threshold),
                fmt_sig(r.cum_regret_mean),
                fmt_sig(r.cum_regret_lower),
                fmt_sig(r.cum_regret_upper),
                fmt_sig(r.cum_band_movement_mean),
                fmt_sig(r.cum_band_movement_lower),
                fmt_sig(r.cum_band_movement_upper),
            ]
        })
        .collect::<Vec<_>>();
    csv_table(&SWEEP_COLUMNS, &cells)
}

/// Largest elementwise relative difference between two aggregate sets over
/// the series they share; differing lengths count as infinite.
fn max_relative_difference(a: &AggregateSeries, b: &AggregateSeries) -> f64 {
    let mut max = 0.0f64;
    for (key, sa) in &a.series {
        let Some(sb) = b.series.get(key) else { continue };
        for (va, vb) in [
            (&sa.mean, &sb.mean),
            (&sa.lower, &sb.lower),
            (&sa.upper, &sb.upper),
        ] {
            if va.len() != vb.len() {
                return f64::INFINITY;
            }
            for (&x, &y) in va.iter().zip(vb) {
                let scale = x.abs().max(y.abs()).max(1.0);
                max = max.max((x - y).abs() / scale);
            }
        }
    }
    max
}

fn parse_cell<T: FromStr>(cell: &str, line: usize, column: &str) -> Result<T> {
    cell.parse().map_err(|_| {
        Error::contract(format!(
            "metrics.csv line {line}, column {column}: invalid value {cell:?}"
        ))
    })
}

/// Parses a metrics.csv back into per-update rows, naming the first
/// offending column or line on any schema violation.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => return Err(Error::contract("metrics.csv: empty file")),
    };
    let header_cells: Vec<&str> = header.split(',').collect();
    for (i, expected) in METRICS_COLUMNS.iter().enumerate() {
        match header_cells.get(i) {
            Some(got) if got == expected => {}
            got => {
                return Err(Error::contract(format!(
                    "metrics.csv header column {}: expected {expected:?}, got {:?}",
                    i + 1,
                    got.copied().unwrap_or("<missing>")
                )))
            }
        }
    }
    if header_cells.len() != METRICS_COLUMNS.len() {
        return Err(Error::contract(format!(
            "metrics.csv header: expected {} columns, got {}",
            METRICS_COLUMNS.len(),
            header_cells.len()
        )));
    }

    struct ArmRow {
        line: usize,
        arm: usize,
        share_planned: f64,
        share_realised: f64,
        assignments: u64,
        successes: u64,
        memory_len: usize,
        regret: f64,
        cum_regret: f64,
        band_movement: u64,
        cum_band_movement: u64,
    }
    let mut groups: BTreeMap<(u64, u64), Vec<ArmRow>> = BTreeMap::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let cells: Vec<&str> = raw.split(',').collect();
        if cells.len() != METRICS_COLUMNS.len() {
            return Err(Error::contract(format!(
                "metrics.csv line {line}: expected {} columns, got {}",
                METRICS_COLUMNS.len(),
                cells.len()
            )));
        }
        let run: u64 = parse_cell(cells[0], line, "run")?;
        let update: u64 = parse_cell(cells[1], line, "update")?;
        groups.entry((run, update)).or_default().push(ArmRow {
            line,
            arm: parse_cell(cells[2], line, "arm")?,
            share_planned: parse_cell(cells[3], line, "share_planned")?,
            share_realised: parse_cell(cells[4], line, "share_realised")?,
            assignments: parse_cell(cells[5], line, "assignments")?,
            successes: parse_cell(cells[6], line, "successes")?,
            memory_len: parse_cell(cells[7], line, "memory_len")?,
            regret: parse_cell(cells[8], line, "regret")?,
            cum_regret: parse_cell(cells[9], line, "cum_regret")?,
            band_movement: parse_cell(cells[10], line, "band_movement")?,
            cum_band_movement: parse_cell(cells[11], line, "cum_band_movement")?,
        });
    }
    if groups.is_empty() {
        return Err(Error::contract("metrics.csv: no data rows"));
    }

    let n_arms = groups.values().next().unwrap().len();
    let mut rows = Vec::with_capacity(groups.len());
    for ((run, update), mut group) in groups {
        group.sort_by_key(|a| a.arm);
        let arms_seen: Vec<usize> = group.iter().map(|a| a.arm).collect();
        if arms_seen != (0..n_arms).collect::<Vec<_>>() {
            return Err(Error::contract(format!(
                "metrics.csv line {}: run {run} update {update} has arm set {arms_seen:?}, expected 0..{n_arms}",
                group[0].line
            )));
        }
        let first = &group[0];
        for a in &group[1..] {
            if a.memory_len != first.memory_len
                || a.regret != first.regret
                || a.cum_regret != first.cum_regret
                || a.band_movement != first.band_movement
                || a.cum_band_movement != first.cum_band_movement
            {
                return Err(Error::contract(format!(
                    "metrics.csv line {}: per-update columns disagree across arms of run {run} update {update}",
                    a.line
                )));
            }
        }
        rows.push(MetricsRow {
            run,
            update,
            share_planned: group.iter().map(|a| a.share_planned).collect(),
            share_realised: group.iter().map(|a| a.share_realised).collect(),
            assignments: group.iter().map(|a| a.assignments).collect(),
            successes: group.iter().map(|a| a.successes).collect(),
            memory_len: first.memory_len,
            regret: first.regret,
            regret_realised: 0.0,
            cum_regret: first.cum_regret,
            cum_regret_realised: 0.0,
            band_movement: first.band_movement,
            cum_band_movement: first.cum_band_movement,
        });
    }
    Ok(rows)
}
