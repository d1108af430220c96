//! Risk and regret estimation: Monte Carlo drivers, the exact multinomial
//! enumeration oracle, and coverage audits.
//!
//! Replications derive independent child streams from one experiment
//! stream and are aggregated by pairwise summation in replication order,
//! so results are identical whatever the worker-pool size, and compared
//! schemes always share per-replication, per-arm draws (common random
//! numbers).

pub mod experiments;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocators::{
    optimistic_tracking_counts_with, sample_static, uniform, TrackedDistance, TrackingOptions,
};
use crate::confidence::UpperBound;
use crate::distributions::{distance, DiscreteDistribution, DistanceKind, EtaInterior};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSpec;
use crate::rng::RngStream;

/// Cap on the number of multinomial outcomes the enumeration oracle visits.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// A set of arms to learn, with an optional interiority guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub dists: Vec<DiscreteDistribution>,
    pub eta: Option<f64>,
    pub label: String,
}

impl ProblemInstance {
    pub fn new(dists: Vec<DiscreteDistribution>, eta: Option<f64>, label: &str) -> Result<Self> {
        if dists.is_empty() {
            return Err(Error::InvalidParameter("an instance needs arms".into()));
        }
        let l = dists[0].len();
        for d in &dists {
            if d.len() != l {
                return Err(Error::DimensionMismatch(l, d.len()));
            }
        }
        if let Some(eta) = eta {
            let interior = EtaInterior::new(eta)?;
            for (i, d) in dists.iter().enumerate() {
                if !interior.contains(d) {
                    return Err(Error::InvalidParameter(format!(
                        "arm {i} is not {eta}-interior"
                    )));
                }
            }
        }
        Ok(Self {
            dists,
            eta,
            label: label.to_string(),
        })
    }

    pub fn k(&self) -> usize {
        self.dists.len()
    }

    pub fn l(&self) -> usize {
        self.dists[0].len()
    }

    /// The declared eta, or the tightest margin the arms actually satisfy.
    pub fn eta_or_margin(&self) -> f64 {
        self.eta.unwrap_or_else(|| {
            self.dists
                .iter()
                .map(|d| d.interior_margin())
                .fold(f64::INFINITY, f64::min)
                .clamp(1e-12, 0.5 - 1e-9)
        })
    }
}

/// Settings for the adaptive scheme inside risk and regret estimators.
/// `None` fields select the per-distance defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub delta: Option<f64>,
    pub exploration_scale: Option<f64>,
}

impl AdaptiveOptions {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta: Some(delta),
            ..Self::default()
        }
    }
}

/// How samples are allocated before the empirical distributions are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Uniform,
    Oracle,
    Adaptive,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Uniform => "uniform",
            Scheme::Oracle => "oracle",
            Scheme::Adaptive => "adaptive",
        }
    }
}

/// Monte Carlo estimate of the risk (max over arms of the expected
/// distance). `mean_of_max` is the max-then-mean diagnostic; the risk
/// itself is always mean-then-max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub per_arm_mean: Vec<f64>,
    pub per_arm_stderr: Vec<f64>,
    pub risk: f64,
    pub risk_stderr: f64,
    pub mean_of_max: f64,
    pub reps: u64,
}

/// Sum by pairwise (cascade) reduction; associative up to rounding on the
/// order of an ulp, so permuting the inputs barely moves the result.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn resolve_delta(
    delta: Option<f64>,
    tracked: TrackedDistance,
    n: u64,
    instance: &ProblemInstance,
) -> f64 {
    delta.unwrap_or_else(|| tracked.default_delta(n, instance.k(), instance.eta_or_margin()))
}

/// Estimate the risk of a scheme by `reps` independent replications.
///
/// The uniform scheme works for every distance kind; the oracle and
/// adaptive schemes need a distance with an allocation pipeline.
pub fn estimate_risk(
    scheme: Scheme,
    instance: &ProblemInstance,
    kind: &DistanceKind,
    n: u64,
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<RiskEstimate> {
    if reps < 2 {
        return Err(Error::InvalidParameter("need at least 2 replications".into()));
    }
    let counts = match scheme {
        Scheme::Uniform => Some(uniform(instance.k(), n as f64)?.integer_counts()),
        Scheme::Oracle => Some(
            TrackedDistance::from_kind(kind)?
                .approx_oracle(&instance.dists, n as f64)?
                .integer_counts(),
        ),
        Scheme::Adaptive => None,
    };
    let tracking = match scheme {
        Scheme::Adaptive => {
            let tracked = TrackedDistance::from_kind(kind)?;
            Some((tracked, resolve_delta(adaptive.delta, tracked, n, instance)))
        }
        _ => None,
    };
    let eta = instance.eta_or_margin();
    let k = instance.k();

    let per_rep: Vec<Result<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_stream = stream.substream(rep);
            let arms = match (&counts, &tracking) {
                (Some(counts), _) => sample_static(&instance.dists, counts, &rep_stream),
                (None, Some((tracked, delta))) => optimistic_tracking_counts_with(
                    &instance.dists,
                    *tracked,
                    n,
                    *delta,
                    Some(eta),
                    &rep_stream,
                    adaptive.exploration_scale,
                )?,
                (None, None) => unreachable!("adaptive scheme always has tracking config"),
            };
            arms.iter()
                .zip(&instance.dists)
                .map(|(arm, truth)| distance(kind, &arm.empirical()?, truth))
                .collect()
        })
        .collect();
    let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;

    let mut per_arm_mean = Vec::with_capacity(k);
    let mut per_arm_stderr = Vec::with_capacity(k);
    for arm in 0..k {
        let column: Vec<f64> = per_rep.iter().map(|row| row[arm]).collect();
        let (mean, se) = mean_and_stderr(&column);
        per_arm_mean.push(mean);
        per_arm_stderr.push(se);
    }
    let maxes: Vec<f64> = per_rep
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let (mean_of_max, _) = mean_and_stderr(&maxes);

    let worst = per_arm_mean
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    Ok(RiskEstimate {
        risk: per_arm_mean[worst],
        risk_stderr: per_arm_stderr[worst],
        per_arm_mean,
        per_arm_stderr,
        mean_of_max,
        reps,
    })
}

/// Exact expected distance after `t` i.i.d. samples, by summing the
/// distance over every multinomial outcome. Ground truth for the Monte
/// Carlo estimators at small `t` and alphabet.
pub fn exact_risk_enumeration(
    truth: &DiscreteDistribution,
    kind: &DistanceKind,
    t: u64,
) -> Result<f64> {
    let l = truth.len();
    let outcomes = compositions(t, l);
    if outcomes > ENUMERATION_CAP as u128 {
        return Err(Error::TooManyOutcomes(outcomes, ENUMERATION_CAP));
    }
    // log t! table for the multinomial pmf.
    let mut ln_fact = vec![0.0f64; t as usize + 1];
    for i in 1..=t as usize {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let probs = truth.probs();
    let mut counts = vec![0u64; l];
    let mut acc = 0.0;
    enumerate_counts(t, 0, &mut counts, &mut |counts| {
        let mut ln_pmf = ln_fact[t as usize];
        for (j, &c) in counts.iter().enumerate() {
            if c > 0 && probs[j] == 0.0 {
                return Ok(());
            }
            ln_pmf -= ln_fact[c as usize];
            if c > 0 {
                ln_pmf += c as f64 * probs[j].ln();
            }
        }
        let empirical = DiscreteDistribution::new(
            &counts
                .iter()
                .map(|&c| c as f64 / t as f64)
                .collect::<Vec<_>>(),
        )?;
        acc += ln_pmf.exp() * distance(kind, &empirical, truth)?;
        Ok(())
    })?;
    Ok(acc)
}

fn compositions(t: u64, l: usize) -> u128 {
    // C(t + l - 1, l - 1)
    let mut num = 1u128;
    for i in 0..(l as u128 - 1) {
        num = num.saturating_mul(t as u128 + l as u128 - 1 - i);
        num /= i + 1;
    }
    num
}

fn enumerate_counts<F: FnMut(&[u64]) -> Result<()>>(
    remaining: u64,
    idx: usize,
    counts: &mut Vec<u64>,
    visit: &mut F,
) -> Result<()> {
    if idx == counts.len() - 1 {
        counts[idx] = remaining;
        return visit(counts);
    }
    for c in 0..=remaining {
        counts[idx] = c;
        enumerate_counts(remaining - c, idx + 1, counts, visit)?;
    }
    Ok(())
}

/// Log-factorial table shared by the binomial expectation sums.
pub struct BinomialTable {
    ln_fact: Vec<f64>,
}

impl BinomialTable {
    pub fn new(max_t: u64) -> Self {
        let mut ln_fact = vec![0.0f64; max_t as usize + 1];
        for i in 1..=max_t as usize {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        Self { ln_fact }
    }

    /// `E[f(k/t)]` for `k ~ Binomial(t, p)` by direct summation.
    fn expect<F: Fn(f64) -> f64>(&self, p: f64, t: u64, f: F) -> f64 {
        if p <= 0.0 {
            return f(0.0);
        }
        if p >= 1.0 {
            return f(1.0);
        }
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let lt = self.ln_fact[t as usize];
        (0..=t)
            .map(|k| {
                let ln_pmf = lt - self.ln_fact[k as usize] - self.ln_fact[(t - k) as usize]
                    + k as f64 * lp
                    + (t - k) as f64 * lq;
                ln_pmf.exp() * f(k as f64 / t as f64)
            })
            .sum()
    }

    /// Exact expected distance after `t` i.i.d. samples, for the distances
    /// whose expectation separates over symbols (each symbol count is
    /// marginally binomial). Separation and Hellinger do not separate.
    pub fn conditional_expected_distance(
        &self,
        kind: &DistanceKind,
        truth: &DiscreteDistribution,
        t: u64,
    ) -> Result<f64> {
        if t == 0 {
            return Err(Error::ZeroPulls);
        }
        if (t as usize) >= self.ln_fact.len() {
            return Err(Error::InvalidParameter(format!(
                "binomial table holds {} entries, needed {t}",
                self.ln_fact.len()
            )));
        }
        match kind {
            DistanceKind::L2Sq | DistanceKind::Chi2 => {
                crate::objectives::exact_expected_distance(kind, truth, t as f64)
            }
            DistanceKind::L1 => Ok(truth
                .probs()
                .iter()
                .map(|&p| self.expect(p, t, |ph| (ph - p).abs()))
                .sum()),
            DistanceKind::Tv => {
                let l1 = self.conditional_expected_distance(&DistanceKind::L1, truth, t)?;
                Ok(l1 / 2.0)
            }
            DistanceKind::Kl => {
                for (j, &p) in truth.probs().iter().enumerate() {
                    if p == 0.0 {
                        return Err(Error::DivisionByZeroMass(j));
                    }
                }
                Ok(truth
                    .probs()
                    .iter()
                    .map(|&p| {
                        self.expect(p, t, |ph| if ph == 0.0 { 0.0 } else { ph * (ph / p).ln() })
                    })
                    .sum())
            }
            other => Err(Error::UnsupportedDistance(other.name().to_string())),
        }
    }
}

/// Standalone wrapper around [`BinomialTable::conditional_expected_distance`].
pub fn exact_conditional_distance(
    kind: &DistanceKind,
    truth: &DiscreteDistribution,
    t: u64,
) -> Result<f64> {
    BinomialTable::new(t).conditional_expected_distance(kind, truth, t)
}

/// Theory-overlay constants for plotting; never used as pass/fail gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryOverlay {
    pub m_const: f64,
    pub leading_regret_term: f64,
}

/// A risk comparison between a scheme and the rounded approx-oracle run on
/// common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub scheme_risk: RiskEstimate,
    pub oracle_risk: RiskEstimate,
    pub regret: f64,
    pub combined_stderr: f64,
    /// The equalized objective level at the approx-oracle allocation.
    pub phi_at_oracle: Option<f64>,
    /// Scheme risk minus the equalized level: the tracking part of the
    /// regret when the objective is exact, a decomposition diagnostic
    /// otherwise.
    pub tracking_term: Option<f64>,
    pub theory: Option<TheoryOverlay>,
}

fn phi_level(tracked: TrackedDistance, instance: &ProblemInstance, n: u64) -> Option<f64> {
    let alloc = tracked.approx_oracle(&instance.dists, n as f64).ok()?;
    let spec: ObjectiveSpec = tracked.objective(instance.l());
    let mut level: Option<f64> = None;
    for (dist, &t) in instance.dists.iter().zip(&alloc.counts) {
        if t <= 0.0 {
            continue;
        }
        let c = tracked.c_param(dist).ok()?;
        let v = spec.eval(c, t).ok()?;
        level = Some(level.map_or(v, |best: f64| best.max(v)));
    }
    level
}

fn theory_overlay(
    tracked: TrackedDistance,
    instance: &ProblemInstance,
    n: u64,
    delta: f64,
) -> Option<TheoryOverlay> {
    let k = instance.k() as f64;
    let l = instance.l() as f64;
    let sched = tracked.schedule(delta, instance.k(), instance.l()).ok()?;
    let delta_n = sched.delta_t(n);
    let n = n as f64;
    match tracked {
        TrackedDistance::L2Sq => {
            let cs: Vec<f64> = instance
                .dists
                .iter()
                .map(|d| tracked.c_param(d).unwrap())
                .collect();
            let sum: f64 = cs.iter().sum();
            let lambdas: Vec<f64> = cs.iter().map(|c| c / sum).collect();
            let l_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
            let l_max = lambdas.iter().cloned().fold(0.0f64, f64::max);
            let m = l_max * (2.0 * (1.0 / delta_n).ln()).sqrt() / (l_min * sum);
            Some(TheoryOverlay {
                m_const: m,
                leading_regret_term: (k + 5.0) * m * l / (l_min * l_min * n.powf(1.5)),
            })
        }
        TrackedDistance::L1 => {
            let cs: Vec<f64> = instance
                .dists
                .iter()
                .map(|d| tracked.c_param(d).unwrap())
                .collect();
            let csq: f64 = cs.iter().map(|c| c * c).sum();
            let big_c = csq.sqrt();
            let lambdas: Vec<f64> = cs.iter().map(|c| c * c / csq).collect();
            let l_min = lambdas.iter().cloned().fold(f64::INFINITY, f64::min);
            let l_max = lambdas.iter().cloned().fold(0.0f64, f64::max);
            let m = 2.0 * l * l_max * (1.0 / delta_n).ln().sqrt() / (big_c * l_min);
            Some(TheoryOverlay {
                m_const: m,
                leading_regret_term: l * ((k + 5.0) * m).sqrt() / (2.0 * l_min * n.powf(0.75)),
            })
        }
        TrackedDistance::Kl => {
            let eta = instance.eta_or_margin();
            let m = (96.0 * k * (1.0 / delta_n).ln()).sqrt() / eta.powi(3);
            Some(TheoryOverlay {
                m_const: m,
                leading_regret_term: 2.0 * (l - 1.0) * k * m / n.powf(2.5),
            })
        }
        _ => None,
    }
}

/// Estimate the regret of a scheme against the rounded approx-oracle, on
/// common random numbers.
pub fn regret(
    scheme: Scheme,
    instance: &ProblemInstance,
    kind: &DistanceKind,
    n: u64,
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<RegretReport> {
    let tracked = TrackedDistance::from_kind(kind)?;
    let scheme_risk = estimate_risk(scheme, instance, kind, n, reps, stream, adaptive)?;
    let oracle_risk = estimate_risk(Scheme::Oracle, instance, kind, n, reps, stream, adaptive)?;
    let regret = scheme_risk.risk - oracle_risk.risk;
    let combined_stderr =
        (scheme_risk.risk_stderr.powi(2) + oracle_risk.risk_stderr.powi(2)).sqrt();
    let phi = phi_level(tracked, instance, n);
    let delta = resolve_delta(adaptive.delta, tracked, n, instance);
    Ok(RegretReport {
        regret,
        combined_stderr,
        phi_at_oracle: phi,
        tracking_term: phi.map(|p| scheme_risk.risk - p),
        theory: theory_overlay(tracked, instance, n, delta),
        scheme_risk,
        oracle_risk,
    })
}

/// Fraction of replications in which every arm's optimistic bound covered
/// its true parameter at every round of a run of the published (scale 1)
/// tracking rule.
pub fn coverage_audit(
    tracked: TrackedDistance,
    instance: &ProblemInstance,
    n: u64,
    delta: f64,
    reps: u64,
    stream: &RngStream,
) -> Result<f64> {
    let cs: Vec<f64> = instance
        .dists
        .iter()
        .map(|d| tracked.c_param(d))
        .collect::<Result<_>>()?;
    let eta = instance.eta_or_margin();
    let options = TrackingOptions {
        exploration_scale: Some(1.0),
        keep_rounds: true,
    };
    let flags: Vec<Result<bool>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_stream = stream.substream(rep);
            let (streams, order) = crate::allocators::default_streams(instance.k(), &rep_stream);
            let traj = crate::allocators::optimistic_tracking_custom(
                &instance.dists,
                tracked,
                n,
                delta,
                Some(eta),
                &streams,
                &order,
                &options,
            )?;
            let covered = traj.rounds.iter().all(|round| {
                round
                    .uppers
                    .iter()
                    .zip(&cs)
                    .all(|(u, &c)| match u {
                        UpperBound::Infinite => true,
                        UpperBound::Finite(v) => *v >= c,
                    })
            });
            Ok(covered)
        })
        .collect();
    let mut covered = 0u64;
    for f in flags {
        if f? {
            covered += 1;
        }
    }
    Ok(covered as f64 / reps as f64)
}

/// Which per-symbol concentration event to audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Relative-Chernoff event: `|p-hat - p| <= sqrt(3 p log(2/dt) / T)`.
    RelChernoff,
    /// Standard-deviation event on `sqrt(p (1 - p))`.
    StdDev,
    /// Additive Hoeffding event: `|p-hat - p| <= sqrt(2 log(2/dt) / T)`.
    Hoeffding,
}

/// Coverage of one concentration event along round-robin sampling: the
/// fraction of replications in which the event held for every round, arm
/// and symbol.
pub fn event_coverage(
    event: EventKind,
    instance: &ProblemInstance,
    n: u64,
    delta: f64,
    reps: u64,
    stream: &RngStream,
) -> Result<f64> {
    let family = match event {
        EventKind::RelChernoff => crate::confidence::BoundFamily::RelChernoff,
        EventKind::StdDev => crate::confidence::BoundFamily::EmpBernstein,
        EventKind::Hoeffding => crate::confidence::BoundFamily::Hoeffding,
    };
    let sched =
        crate::confidence::ConfidenceSchedule::new(family, delta, instance.k(), instance.l())?;
    let k = instance.k();
    let flags: Vec<bool> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_stream = stream.substream(rep);
            let mut rngs: Vec<_> = (0..k)
                .map(|i| rep_stream.substream(i as u64).rng())
                .collect();
            let mut arms: Vec<_> = (0..k)
                .map(|i| crate::distributions::ArmState::new(i, instance.l()))
                .collect();
            for t in 1..=n {
                // Check the event at round t, then pull round-robin.
                let ln_term = (2.0 / sched.delta_t(t)).ln();
                for (arm, dist) in arms.iter().zip(&instance.dists) {
                    if arm.pulls() == 0 {
                        continue;
                    }
                    let pulls = arm.pulls() as f64;
                    for (j, &count) in arm.counts().iter().enumerate() {
                        let p_hat = count as f64 / pulls;
                        let p = dist.prob(j);
                        let ok = match event {
                            EventKind::RelChernoff => {
                                (p_hat - p).abs() <= (3.0 * p * ln_term / pulls).sqrt()
                            }
                            EventKind::StdDev => {
                                let sd_hat = (p_hat * (1.0 - p_hat)).sqrt();
                                let sd = (p * (1.0 - p)).sqrt();
                                (sd_hat - sd).abs() <= (2.0 * ln_term / pulls).sqrt()
                            }
                            EventKind::Hoeffding => {
                                (p_hat - p).abs() <= (2.0 * ln_term / pulls).sqrt()
                            }
                        };
                        if !ok {
                            return false;
                        }
                    }
                }
                let chosen = ((t - 1) % k as u64) as usize;
                let symbol = instance.dists[chosen].sample(&mut rngs[chosen]);
                arms[chosen].record(symbol);
            }
            true
        })
        .collect();
    Ok(flags.iter().filter(|&&f| f).count() as f64 / reps as f64)
}
