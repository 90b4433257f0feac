//! Sequential pairwise hypothesis testing via Bayes factors.
//!
//! For each pair of arms the observed absolute rate difference is scored
//! against two hypotheses: no difference (a folded normal centred at zero)
//! and a practically relevant difference (the sampling normal marginalised
//! over a truncated-normal prior centred on the pair's minimum detectable
//! effect).  The resulting Bayes factor is compared with a threshold derived
//! from the tolerated spurious-detection probability, and is binned into
//! interpretive evidence bands for reporting.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimation::{diff_standard_error, pooled_rate, ShrunkEstimates};
use crate::window::ArmWindowSummary;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
/// Relative tolerance of the adaptive marginal-likelihood quadrature.
const QUAD_REL_TOL: f64 = 1e-8;
/// Grid size of the non-adaptive fallback integrator.
const FALLBACK_POINTS: usize = 4096;
/// Bayes factors are clamped to `exp(+-MAX_LN_BF)` so they stay positive,
/// finite, and serialisable even when one hypothesis underflows.
const MAX_LN_BF: f64 = 690.0;

/// Evidence threshold `K` for a tolerated spurious-detection probability
/// `p_d`: `K = 1/p_d - 1`, so that a detection at the threshold is wrong
/// with probability at most `p_d`.  Requires `p_d` in `(0, 0.5]` (a
/// threshold below 1 would accept worse-than-even evidence).
pub fn threshold_from_fdr(p_d: f64) -> Result<f64> {
    if !(p_d > 0.0 && p_d <= 0.5) {
        return Err(Error::contract(format!(
            "detection probability must lie in (0, 0.5], got {p_d}"
        )));
    }
    Ok(1.0 / p_d - 1.0)
}

/// Smallest absolute rate difference the pair could detect at significance
/// `alpha` and power `power` with its current window sample sizes:
/// `(z_{1-alpha/2} + z_{power}) * se`, where `se` is the pooled-rate
/// standard error of the difference.
pub fn fixed_horizon_mde(
    a: &ArmWindowSummary,
    b: &ArmWindowSummary,
    pooled: f64,
    alpha: f64,
    power: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::contract(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(power > 0.0 && power < 1.0) {
        return Err(Error::contract(format!(
            "power must lie in (0, 1), got {power}"
        )));
    }
    let se = diff_standard_error(a, b, pooled)?;
    let std_normal = Normal::standard();
    let z_alpha = std_normal.inverse_cdf(1.0 - alpha / 2.0);
    let z_power = std_normal.inverse_cdf(power);
    Ok((z_alpha + z_power) * se)
}

/// Prior parameters of the practically-relevant-difference hypothesis for
/// one pair: centre (the pair's minimum detectable effect) and spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPriors {
    pub mde: f64,
    pub h1_sd: f64,
}

impl HypothesisPriors {
    /// Derives the pair's priors from its window summaries: the centre is
    /// the fixed-horizon minimum detectable effect at the configured
    /// detection threshold and power, the spread a configured fraction of
    /// it.
    pub fn for_pair(
        a: &ArmWindowSummary,
        b: &ArmWindowSummary,
        pooled: f64,
        config: &ExperimentConfig,
    ) -> Result<Self> {
        let mde = fixed_horizon_mde(a, b, pooled, config.detection_threshold, config.mde_power)?;
        Ok(HypothesisPriors {
            mde,
            h1_sd: config.h1_prior_sd_ratio * mde,
        })
    }
}

fn log_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}

/// Bayes factor for an observed absolute difference `observed_effect` with
/// standard error `se`.
///
/// The null density is a normal for the difference folded at zero; the
/// alternative marginalises the same sampling density over a normal prior
/// centred at `priors.mde` with spread `priors.h1_sd`, truncated to
/// non-negative effects and renormalised.  The marginal integral runs in
/// log space over `[0, max(observed, mde) + 8 max(se, h1_sd)]` with
/// adaptive quadrature (relative tolerance 1e-8) and a dense trapezoid
/// fallback, so extreme effects neither overflow nor truncate the
/// integrand's peak.
pub fn bayes_factor(observed_effect: f64, se: f64, priors: &HypothesisPriors) -> Result<f64> {
    if !(observed_effect >= 0.0 && observed_effect.is_finite()) {
        return Err(Error::contract(format!(
            "observed effect must be a non-negative finite number, got {observed_effect}"
        )));
    }
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::contract(format!(
            "standard error must be positive and finite, got {se}"
        )));
    }
    if !(priors.mde > 0.0 && priors.mde.is_finite() && priors.h1_sd > 0.0 && priors.h1_sd.is_finite())
    {
        return Err(Error::contract(format!(
            "priors must be positive and finite, got mde {} and sd {}",
            priors.mde, priors.h1_sd
        )));
    }

    let log_h0 = std::f64::consts::LN_2 + log_normal_pdf(observed_effect, 0.0, se);
    let truncation_mass = Normal::standard().cdf(priors.mde / priors.h1_sd);
    let log_h1 = log_marginal_h1(observed_effect, se, priors) - truncation_mass.ln();
    let log_bf = (log_h1 - log_h0).clamp(-MAX_LN_BF, MAX_LN_BF);
    Ok(log_bf.exp())
}

/// Log of the unnormalised alternative marginal
/// `integral over delta >= 0 of N(observed; delta, se) N(delta; mde, h1_sd)`.
fn log_marginal_h1(observed: f64, se: f64, priors: &HypothesisPriors) -> f64 {
    let mde = priors.mde;
    let h1_sd = priors.h1_sd;
    let upper = observed.max(mde) + 8.0 * se.max(h1_sd);

    // The log integrand is an exact downward parabola; its apex is the
    // precision-weighted mean of the observation and the prior centre.
    let precision = 1.0 / (se * se) + 1.0 / (h1_sd * h1_sd);
    let apex = ((observed / (se * se) + mde / (h1_sd * h1_sd)) / precision).clamp(0.0, upper);
    let apex_sd = precision.sqrt().recip();
    let log_integrand =
        |delta: f64| log_normal_pdf(observed, delta, se) + log_normal_pdf(delta, mde, h1_sd);
    let log_peak = log_integrand(apex);
    let shifted = |delta: f64| (log_integrand(delta) - log_peak).exp();

    // Panel boundaries bracketing every feature of the integrand, so a
    // narrow peak cannot slip between the abscissae of a coarse first pass.
    let mut cuts: Vec<f64> = Vec::with_capacity(32);
    for offset in [-6.0, -2.0, -0.5, 0.5, 2.0, 6.0] {
        cuts.push(apex + offset * apex_sd);
    }
    for centre in [observed, mde] {
        for offset in [-4.0, 0.0, 4.0] {
            cuts.push(centre + offset * se.max(h1_sd));
        }
    }
    for i in 0..=16 {
        cuts.push(upper * i as f64 / 16.0);
    }
    cuts.retain(|c| c.is_finite() && *c > 0.0 && *c < upper);
    cuts.push(0.0);
    cuts.push(upper);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() <= upper * 1e-14);

    let coarse: f64 = cuts
        .windows(2)
        .map(|p| simpson3(&shifted, p[0], p[1]))
        .sum();
    let budget = QUAD_REL_TOL * coarse.max(f64::MIN_POSITIVE) / (cuts.len() - 1) as f64;
    let mut total: f64 = cuts
        .windows(2)
        .map(|p| adaptive_simpson(&shifted, p[0], p[1], budget))
        .sum();
    if !total.is_finite() || total <= 0.0 {
        total = trapezoid(&shifted, 0.0, upper, FALLBACK_POINTS);
    }
    log_peak + total.ln()
}

fn simpson3<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, m, b, fa, fm, fb, whole, eps, 32)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adaptive_step(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
            + adaptive_step(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
    }
}

fn trapezoid<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, points: usize) -> f64 {
    let h = (b - a) / (points - 1) as f64;
    let mut sum = 0.5 * (f(a) + f(b));
    for i in 1..points - 1 {
        sum += f(a + h * i as f64);
    }
    sum * h
}

/// Evidence band of a Bayes factor on the conventional interpretive scale.
///
/// `|band|` grows with the strength of evidence (0 up to 3-fold, 1 up to
/// 20-fold, 2 up to 150-fold, 3 beyond); the sign says which hypothesis the
/// evidence favours.  A boundary value belongs to the stronger band, and
/// `classify_band(1/bf) == -classify_band(bf)` holds exactly.
pub fn classify_band(bf: f64) -> Result<i32> {
    if !(bf > 0.0 && bf.is_finite()) {
        return Err(Error::contract(format!(
            "bayes factor must be positive and finite, got {bf}"
        )));
    }
    fn magnitude(v: f64) -> i32 {
        if v >= 150.0 {
            3
        } else if v >= 20.0 {
            2
        } else if v >= 3.0 {
            1
        } else {
            0
        }
    }
    if bf >= 1.0 {
        Ok(magnitude(bf))
    } else {
        Ok(-magnitude(1.0 / bf))
    }
}

/// Outcome of one pairwise test against the evidence threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestDecision {
    /// The difference hypothesis cleared the threshold: `bf > K`.
    #[serde(rename = "H1_accepted")]
    H1Accepted,
    /// The no-difference hypothesis cleared it: `bf < 1/K`.
    #[serde(rename = "H0_accepted")]
    H0Accepted,
    /// Neither hypothesis has sufficient evidence yet.
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl TestDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            TestDecision::H1Accepted => "H1_accepted",
            TestDecision::H0Accepted => "H0_accepted",
            TestDecision::Inconclusive => "inconclusive",
        }
    }
}

/// Threshold comparison; boundary values stay inconclusive.
pub fn decision_from_bf(bf: f64, k_threshold: f64) -> TestDecision {
    if bf > k_threshold {
        TestDecision::H1Accepted
    } else if bf < 1.0 / k_threshold {
        TestDecision::H0Accepted
    } else {
        TestDecision::Inconclusive
    }
}

/// Numeric evidence for one tested pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvidence {
    /// Absolute difference of the shrunk rates.
    pub observed_effect: f64,
    pub standard_error: f64,
    pub mde: f64,
    pub bayes_factor: f64,
    pub band: i32,
}

/// One pair's test result.  `evidence` is `None` when either arm had no
/// window data, in which case the decision is inconclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub arm_lo: usize,
    pub arm_hi: usize,
    pub evidence: Option<PairEvidence>,
    pub decision: TestDecision,
}

/// Tests every unordered pair of arms, in lexicographic `(lo, hi)` order.
///
/// Effects are differences of shrunk rates; standard errors, minimum
/// detectable effects, and priors come from the raw window counts.  Pairs
/// involving an arm with no window data (absent from `estimates`) carry no
/// evidence and are inconclusive.
pub fn test_all_pairs(
    estimates: &ShrunkEstimates,
    summaries: &[ArmWindowSummary],
    config: &ExperimentConfig,
) -> Result<Vec<PairwiseTest>> {
    let k_threshold = threshold_from_fdr(config.detection_threshold)?;
    let n = summaries.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for lo in 0..n {
        for hi in lo + 1..n {
            let pair = match (estimates.shrunk_for(lo), estimates.shrunk_for(hi)) {
                (Some(r_lo), Some(r_hi)) => {
                    let a = &summaries[lo];
                    let b = &summaries[hi];
                    let pooled = pooled_rate(a, b)?;
                    let se = diff_standard_error(a, b, pooled)?;
                    let priors = HypothesisPriors::for_pair(a, b, pooled, config)?;
                    let observed = (r_lo - r_hi).abs();
                    let bf = bayes_factor(observed, se, &priors)?;
                    PairwiseTest {
                        arm_lo: lo,
                        arm_hi: hi,
                        evidence: Some(PairEvidence {
                            observed_effect: observed,
                            standard_error: se,
                            mde: priors.mde,
                            bayes_factor: bf,
                            band: classify_band(bf)?,
                        }),
                        decision: decision_from_bf(bf, k_threshold),
                    }
                }
                _ => PairwiseTest {
                    arm_lo: lo,
                    arm_hi: hi,
                    evidence: None,
                    decision: TestDecision::Inconclusive,
                },
            };
            out.push(pair);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::james_stein;
    use proptest::prelude::*;

    fn summary(arm: usize, assignments: u64, successes: u64) -> ArmWindowSummary {
        ArmWindowSummary {
            arm,
            assignments,
            successes,
            rate: (assignments > 0).then(|| successes as f64 / assignments as f64),
        }
    }

    #[test]
    fn threshold_examples_are_exact() {
        assert_eq!(threshold_from_fdr(0.05).unwrap(), 19.0);
        assert_eq!(threshold_from_fdr(0.25).unwrap(), 3.0);
        assert_eq!(threshold_from_fdr(0.5).unwrap(), 1.0);
    }

    #[test]
    fn threshold_rejects_out_of_range() {
        for bad in [0.0, -0.1, 0.500001, 1.0, f64::NAN] {
            assert!(threshold_from_fdr(bad).is_err(), "accepted {bad}");
        }
    }

    #[test]
    fn mde_matches_tabulated_quantiles() {
        // z_{0.975} and z_{0.8} from standard normal tables.
        let z = 1.959963984540054 + 0.8416212335729143;
        let a = summary(0, 1000, 50);
        let b = summary(1, 1000, 30);
        let se = (0.04f64 * 0.96 * 0.002).sqrt();
        let mde = fixed_horizon_mde(&a, &b, 0.04, 0.05, 0.8).unwrap();
        assert!((mde - z * se).abs() < 1e-12);
    }

    #[test]
    fn mde_shrinks_with_sample_size() {
        let small = fixed_horizon_mde(&summary(0, 100, 5), &summary(1, 100, 3), 0.04, 0.05, 0.8)
            .unwrap();
        let large =
            fixed_horizon_mde(&summary(0, 10000, 500), &summary(1, 10000, 300), 0.04, 0.05, 0.8)
                .unwrap();
        assert!(large < small);
    }

    fn priors_for(se: f64, ratio: f64) -> HypothesisPriors {
        let mde = (1.959963984540054 + 0.8416212335729143) * se;
        HypothesisPriors {
            mde,
            h1_sd: ratio * mde,
        }
    }

    #[test]
    fn zero_effect_favours_the_null() {
        let se = 0.01;
        let bf = bayes_factor(0.0, se, &priors_for(se, 0.5)).unwrap();
        // Closed-form normal-product evaluation of the same integral gives
        // 0.0693 at this prior width.
        assert!((bf - 0.0693).abs() < 0.001, "bf = {bf}");
    }

    #[test]
    fn effect_at_the_mde_favours_the_alternative() {
        let se = 0.01;
        let p = priors_for(se, 0.5);
        let bf = bayes_factor(p.mde, se, &p).unwrap();
        assert!(bf > 1.0, "bf = {bf}");
    }

    #[test]
    fn bayes_factor_is_strictly_monotone_in_the_effect() {
        let se = 0.008;
        let p = priors_for(se, 0.5);
        let mut prev = bayes_factor(0.0, se, &p).unwrap();
        for i in 1..=40 {
            let d = 2.0 * p.mde * i as f64 / 40.0;
            let bf = bayes_factor(d, se, &p).unwrap();
            assert!(bf > prev, "not increasing at step {i}: {bf} <= {prev}");
            prev = bf;
        }
    }

    #[test]
    fn bayes_factor_is_scale_invariant() {
        // d, se, mde, h1_sd all share one unit, so rescaling that unit must
        // not move the Bayes factor.
        let p = HypothesisPriors {
            mde: 0.03,
            h1_sd: 0.012,
        };
        let a = bayes_factor(0.02, 0.009, &p).unwrap();
        for scale in [1e-3, 0.1, 50.0] {
            let ps = HypothesisPriors {
                mde: p.mde * scale,
                h1_sd: p.h1_sd * scale,
            };
            let b = bayes_factor(0.02 * scale, 0.009 * scale, &ps).unwrap();
            assert!((a - b).abs() / a < 1e-6, "scale {scale}: {a} vs {b}");
        }
    }

    #[test]
    fn bayes_factor_matches_dense_grid_oracle() {
        let cases = [
            (0.0, 0.01, 0.028, 0.014),
            (0.015, 0.01, 0.028, 0.014),
            (0.03, 0.005, 0.014, 0.007),
            (0.1, 0.02, 0.05, 0.04),
            (0.001, 0.0005, 0.0014, 0.0007),
        ];
        for &(d, se, mde, h1_sd) in &cases {
            let p = HypothesisPriors { mde, h1_sd };
            let got = bayes_factor(d, se, &p).unwrap();
            let want = grid_oracle(d, se, mde, h1_sd);
            assert!(
                ((got - want) / want).abs() < 1e-6,
                "case {d}/{se}: got {got}, oracle {want}"
            );
        }
    }

    /// Independent Bayes-factor evaluation: plain 200k-point trapezoid of
    /// the likelihood ratio over the same support, no adaptivity, no log
    /// shift.
    fn grid_oracle(d: f64, se: f64, mde: f64, h1_sd: f64) -> f64 {
        let pdf = |x: f64, mean: f64, sd: f64| {
            let z = (x - mean) / sd;
            (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        };
        let upper = d.max(mde) + 8.0 * se.max(h1_sd);
        let n = 200_000;
        let h = upper / n as f64;
        let f = |delta: f64| pdf(d, delta, se) * pdf(delta, mde, h1_sd);
        let mut integral = 0.5 * (f(0.0) + f(upper));
        for i in 1..n {
            integral += f(h * i as f64);
        }
        integral *= h;
        let mass = Normal::standard().cdf(mde / h1_sd);
        (integral / mass) / (2.0 * pdf(d, 0.0, se))
    }

    #[test]
    fn bayes_factor_survives_extreme_separation() {
        // z = d/se around 150: both hypotheses underflow naive density
        // arithmetic, but the log-domain route keeps a finite answer.
        let p = priors_for(4.5e-4, 0.5);
        let bf = bayes_factor(0.07, 4.5e-4, &p).unwrap();
        assert!(bf.is_finite() && bf > 1e50, "bf = {bf}");
    }

    #[test]
    fn bayes_factor_rejects_bad_inputs() {
        let p = priors_for(0.01, 0.5);
        assert!(bayes_factor(-0.01, 0.01, &p).is_err());
        assert!(bayes_factor(0.01, 0.0, &p).is_err());
        assert!(bayes_factor(f64::NAN, 0.01, &p).is_err());
        let bad = HypothesisPriors {
            mde: 0.0,
            h1_sd: 0.01,
        };
        assert!(bayes_factor(0.01, 0.01, &bad).is_err());
    }

    #[test]
    fn band_examples() {
        assert_eq!(classify_band(1.0).unwrap(), 0);
        assert_eq!(classify_band(2.9).unwrap(), 0);
        assert_eq!(classify_band(3.0).unwrap(), 1);
        assert_eq!(classify_band(25.0).unwrap(), 2);
        assert_eq!(classify_band(150.0).unwrap(), 3);
        assert_eq!(classify_band(1e6).unwrap(), 3);
        assert_eq!(classify_band(1.0 / 3.0).unwrap(), -1);
        assert_eq!(classify_band(0.01).unwrap(), -2);
        assert_eq!(classify_band(1e-9).unwrap(), -3);
        assert!(classify_band(0.0).is_err());
        assert!(classify_band(-1.0).is_err());
        assert!(classify_band(f64::INFINITY).is_err());
    }

    #[test]
    fn decision_boundaries_stay_inconclusive() {
        assert_eq!(decision_from_bf(19.0, 19.0), TestDecision::Inconclusive);
        assert_eq!(decision_from_bf(19.0001, 19.0), TestDecision::H1Accepted);
        assert_eq!(decision_from_bf(1.0 / 19.0, 19.0), TestDecision::Inconclusive);
        assert_eq!(decision_from_bf(0.05, 19.0), TestDecision::H0Accepted);
    }

    fn default_config() -> ExperimentConfig {
        ExperimentConfig::default()
    }

    #[test]
    fn all_pairs_cover_every_combination_in_order() {
        let s: Vec<_> = (0..4).map(|a| summary(a, 500, 20 + 5 * a as u64)).collect();
        let est = james_stein(&s).unwrap();
        let tests = test_all_pairs(&est, &s, &default_config()).unwrap();
        let pairs: Vec<_> = tests.iter().map(|t| (t.arm_lo, t.arm_hi)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(tests.iter().all(|t| t.evidence.is_some()));
    }

    #[test]
    fn starved_arm_pairs_carry_no_evidence() {
        let mut s: Vec<_> = (0..4).map(|a| summary(a, 500, 20 + 5 * a as u64)).collect();
        s[2] = summary(2, 0, 0);
        let est = james_stein(&s).unwrap();
        let tests = test_all_pairs(&est, &s, &default_config()).unwrap();
        for t in &tests {
            if t.arm_lo == 2 || t.arm_hi == 2 {
                assert!(t.evidence.is_none());
                assert_eq!(t.decision, TestDecision::Inconclusive);
            } else {
                assert!(t.evidence.is_some());
            }
        }
    }

    #[test]
    fn identical_arms_drift_toward_the_null_band() {
        // With equal counts the shrunk difference is exactly zero; under the
        // default prior width the Bayes factor sits below 1 (null-leaning)
        // but above the acceptance cut 1/19, so the decision stays
        // inconclusive no matter how much data accumulates.
        for n in [1000u64, 100_000, 10_000_000] {
            let s: Vec<_> = (0..5).map(|a| summary(a, n, n / 20)).collect();
            let est = james_stein(&s).unwrap();
            let tests = test_all_pairs(&est, &s, &default_config()).unwrap();
            for t in &tests {
                let e = t.evidence.unwrap();
                assert_eq!(e.observed_effect, 0.0);
                assert!(e.bayes_factor < 1.0);
                assert!(e.bayes_factor > 1.0 / 19.0);
                assert_eq!(t.decision, TestDecision::Inconclusive);
            }
        }
    }

    #[test]
    fn tighter_alternative_prior_lets_identical_arms_accept_the_null() {
        // Narrowing the alternative prior sharpens the contrast between the
        // hypotheses at zero effect, pushing the Bayes factor below 1/19.
        let mut config = default_config();
        config.h1_prior_sd_ratio = 0.3;
        let s: Vec<_> = (0..5).map(|a| summary(a, 50_000, 2_500)).collect();
        let est = james_stein(&s).unwrap();
        let tests = test_all_pairs(&est, &s, &config).unwrap();
        for t in &tests {
            let e = t.evidence.unwrap();
            assert!(e.bayes_factor < 1.0 / 19.0, "bf = {}", e.bayes_factor);
            assert_eq!(t.decision, TestDecision::H0Accepted);
        }
    }

    #[test]
    fn clearly_separated_arms_accept_the_alternative() {
        let s = vec![summary(0, 20_000, 400), summary(1, 20_000, 1400)];
        let est = james_stein(&s).unwrap();
        let tests = test_all_pairs(&est, &s, &default_config()).unwrap();
        assert_eq!(tests[0].decision, TestDecision::H1Accepted);
        assert_eq!(tests[0].evidence.unwrap().band, 3);
    }

    proptest! {
        /// The threshold map inverts cleanly: p = 1/(K+1).
        #[test]
        fn threshold_round_trips(p in 0.001f64..=0.5) {
            let k = threshold_from_fdr(p).unwrap();
            prop_assert!(k >= 1.0);
            prop_assert!((1.0 / (k + 1.0) - p).abs() < 1e-12);
        }

        /// Reciprocal Bayes factors land in mirrored bands, exactly.
        #[test]
        fn bands_are_reciprocal_symmetric(bf in 1e-8f64..=1e8) {
            let direct = classify_band(bf).unwrap();
            let inverse = classify_band(1.0 / bf).unwrap();
            prop_assert_eq!(direct, -inverse);
        }

        /// Band magnitude never decreases as the Bayes factor moves away
        /// from 1.
        #[test]
        fn band_magnitude_is_monotone(a in 1.0f64..=1e6, b in 1.0f64..=1e6) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_band(lo).unwrap() <= classify_band(hi).unwrap());
        }
    }
}
