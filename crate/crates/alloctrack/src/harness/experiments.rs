//! Experiment drivers: the epsilon-family allocation sweep, the
//! uniform-vs-adaptive risk gap table, rate fits over budget grids, and
//! the two-instance lower-bound construction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocators::{optimistic_tracking_counts_with, TrackedDistance};
use crate::distributions::DiscreteDistribution;
use crate::error::{Error, Result};
use crate::harness::{
    estimate_risk, pairwise_sum, AdaptiveOptions, BinomialTable, ProblemInstance, Scheme,
};
use crate::rng::RngStream;

/// The two-arm family used in the sweep experiments: arm 1 is uniform over
/// `l` symbols, arm 2 puts mass `eps` on the first symbol and spreads the
/// rest evenly. At `eps = 1/l` the two arms coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsFamily {
    pub l: usize,
}

impl EpsFamily {
    pub fn new(l: usize) -> Result<Self> {
        if l < 2 {
            return Err(Error::InvalidParameter(
                "the epsilon family needs an alphabet of at least 2".into(),
            ));
        }
        Ok(Self { l })
    }

    pub fn skewed_arm(&self, eps: f64) -> Result<DiscreteDistribution> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1), got {eps}"
            )));
        }
        let mut masses = vec![(1.0 - eps) / (self.l as f64 - 1.0); self.l];
        masses[0] = eps;
        DiscreteDistribution::new(&masses)
    }

    pub fn instance(&self, eps: f64) -> Result<ProblemInstance> {
        ProblemInstance::new(
            vec![DiscreteDistribution::uniform(self.l), self.skewed_arm(eps)?],
            None,
            &format!("peps(l={}, eps={eps})", self.l),
        )
    }
}

/// One point of the allocation sweep: how many samples the approx-oracle
/// gives the second arm versus what the adaptive scheme actually gave it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSweepRecord {
    pub distance: String,
    pub epsilon: f64,
    pub n: u64,
    pub approx_oracle_t2: f64,
    pub adaptive_t2_mean: f64,
    pub adaptive_t2_std: f64,
}

/// Sweep the epsilon family over budgets and skews, recording second-arm
/// allocations of the approx-oracle and the adaptive scheme.
pub fn figure2_sweep(
    family: &EpsFamily,
    distances: &[TrackedDistance],
    n_list: &[u64],
    eps_list: &[f64],
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<Vec<EpsSweepRecord>> {
    let mut records = Vec::new();
    for (di, &distance) in distances.iter().enumerate() {
        for (ni, &n) in n_list.iter().enumerate() {
            for (ei, &eps) in eps_list.iter().enumerate() {
                let instance = family.instance(eps)?;
                let oracle = distance.approx_oracle(&instance.dists, n as f64)?;
                let delta = adaptive.delta.unwrap_or_else(|| {
                    distance.default_delta(n, instance.k(), instance.eta_or_margin())
                });
                let cell = stream
                    .substream(di as u64)
                    .substream(ni as u64)
                    .substream(ei as u64);
                let t2s: Vec<Result<f64>> = (0..reps)
                    .into_par_iter()
                    .map(|rep| {
                        let arms = optimistic_tracking_counts_with(
                            &instance.dists,
                            distance,
                            n,
                            delta,
                            Some(instance.eta_or_margin()),
                            &cell.substream(rep),
                            adaptive.exploration_scale,
                        )?;
                        Ok(arms[1].pulls() as f64)
                    })
                    .collect();
                let t2s: Vec<f64> = t2s.into_iter().collect::<Result<_>>()?;
                let mean = pairwise_sum(&t2s) / reps as f64;
                let sq: Vec<f64> = t2s.iter().map(|v| (v - mean) * (v - mean)).collect();
                let std = (pairwise_sum(&sq) / (reps as f64 - 1.0)).sqrt();
                records.push(EpsSweepRecord {
                    distance: distance.name().to_string(),
                    epsilon: eps,
                    n,
                    approx_oracle_t2: oracle.counts[1],
                    adaptive_t2_mean: mean,
                    adaptive_t2_std: std,
                });
            }
        }
    }
    Ok(records)
}

/// One row of the risk-gap table: uniform minus adaptive risk at a fixed
/// budget, on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRecord {
    pub distance: String,
    pub epsilon: f64,
    pub n: u64,
    pub uniform_risk: f64,
    pub uniform_stderr: f64,
    pub adaptive_risk: f64,
    pub adaptive_stderr: f64,
    pub gap: f64,
    pub gap_stderr: f64,
}

/// Risk gap `L(uniform) - L(adaptive)` across the epsilon family.
pub fn table1_gaps(
    family: &EpsFamily,
    distances: &[TrackedDistance],
    n: u64,
    eps_list: &[f64],
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<Vec<GapRecord>> {
    let mut records = Vec::new();
    for (di, &distance) in distances.iter().enumerate() {
        for (ei, &eps) in eps_list.iter().enumerate() {
            let instance = family.instance(eps)?;
            let cell = stream.substream(di as u64).substream(ei as u64);
            let kind = distance.kind();
            let uniform_est =
                estimate_risk(Scheme::Uniform, &instance, &kind, n, reps, &cell, adaptive)?;
            let adaptive_est =
                estimate_risk(Scheme::Adaptive, &instance, &kind, n, reps, &cell, adaptive)?;
            records.push(GapRecord {
                distance: distance.name().to_string(),
                epsilon: eps,
                n,
                gap: uniform_est.risk - adaptive_est.risk,
                gap_stderr: (uniform_est.risk_stderr.powi(2) + adaptive_est.risk_stderr.powi(2))
                    .sqrt(),
                uniform_risk: uniform_est.risk,
                uniform_stderr: uniform_est.risk_stderr,
                adaptive_risk: adaptive_est.risk,
                adaptive_stderr: adaptive_est.risk_stderr,
            });
        }
    }
    Ok(records)
}

/// Least-squares slope of `ln y` against `ln x`. All inputs must be
/// positive.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "slope fit needs at least two matched points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|&v| v <= 0.0) {
        return Err(Error::InvalidParameter(
            "slope fit needs strictly positive values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(cov / var)
}

/// Mean absolute deviation of the adaptive allocation from the
/// approx-oracle at one budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationPoint {
    pub n: u64,
    /// Mean over replications of `max_i |T_i - T~_i*|`.
    pub mean_max_abs_dev: f64,
    pub std_max_abs_dev: f64,
    /// Mean signed deviation of arm 0, a symmetry diagnostic.
    pub mean_signed_dev_arm0: f64,
}

/// Deviation of the adaptive allocation from the approx-oracle across a
/// budget grid, with a log-log slope fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationRateReport {
    pub distance: String,
    pub points: Vec<DeviationPoint>,
    pub slope: f64,
}

pub fn deviation_rate(
    instance: &ProblemInstance,
    distance: TrackedDistance,
    n_list: &[u64],
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<DeviationRateReport> {
    let mut points = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        let point = deviation_point(
            instance,
            distance,
            n,
            reps,
            &stream.substream(ni as u64),
            adaptive,
        )?;
        points.push(point);
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_max_abs_dev).collect();
    Ok(DeviationRateReport {
        distance: distance.name().to_string(),
        slope: fit_loglog_slope(&xs, &ys)?,
        points,
    })
}

fn deviation_point(
    instance: &ProblemInstance,
    distance: TrackedDistance,
    n: u64,
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<DeviationPoint> {
    let oracle = distance.approx_oracle(&instance.dists, n as f64)?;
    let delta = adaptive
        .delta
        .unwrap_or_else(|| distance.default_delta(n, instance.k(), instance.eta_or_margin()));
    let rows: Vec<Result<(f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let arms = optimistic_tracking_counts_with(
                &instance.dists,
                distance,
                n,
                delta,
                Some(instance.eta_or_margin()),
                &stream.substream(rep),
                adaptive.exploration_scale,
            )?;
            let max_dev = arms
                .iter()
                .zip(&oracle.counts)
                .map(|(a, &t)| (a.pulls() as f64 - t).abs())
                .fold(0.0f64, f64::max);
            let signed0 = arms[0].pulls() as f64 - oracle.counts[0];
            Ok((max_dev, signed0))
        })
        .collect();
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let maxes: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let signed: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mean = pairwise_sum(&maxes) / reps as f64;
    let sq: Vec<f64> = maxes.iter().map(|v| (v - mean) * (v - mean)).collect();
    Ok(DeviationPoint {
        n,
        mean_max_abs_dev: mean,
        std_max_abs_dev: (pairwise_sum(&sq) / (reps as f64 - 1.0)).sqrt(),
        mean_signed_dev_arm0: pairwise_sum(&signed) / reps as f64,
    })
}

/// Regret of the adaptive scheme across a budget grid, with a log-log
/// slope fit.
///
/// Risk here is *allocation-conditional*: each replication contributes the
/// exact expected distance given its final pull counts (per-symbol
/// binomial sums), so the only Monte Carlo noise left is the allocation's
/// own randomness and the rounded-oracle baseline is noise-free. The
/// residual correlation between an arm's draws and its pull count is a
/// higher-order effect this estimator ignores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRatePoint {
    pub n: u64,
    pub regret: f64,
    pub scheme_risk: f64,
    pub oracle_risk: f64,
    pub allocation_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretRateReport {
    pub distance: String,
    pub points: Vec<RegretRatePoint>,
    pub slope: f64,
}

pub fn regret_rate(
    instance: &ProblemInstance,
    distance: TrackedDistance,
    n_list: &[u64],
    reps_for: impl Fn(u64) -> u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<RegretRateReport> {
    let kind = distance.kind();
    let mut points = Vec::new();
    for (ni, &n) in n_list.iter().enumerate() {
        let reps = reps_for(n);
        let table = BinomialTable::new(n);
        let oracle_counts = distance
            .approx_oracle(&instance.dists, n as f64)?
            .integer_counts();
        let oracle_risk = instance
            .dists
            .iter()
            .zip(&oracle_counts)
            .map(|(d, &t)| table.conditional_expected_distance(&kind, d, t))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);

        let delta = adaptive
            .delta
            .unwrap_or_else(|| distance.default_delta(n, instance.k(), instance.eta_or_margin()));
        let cell = stream.substream(ni as u64);
        let rows: Vec<Result<Vec<f64>>> = (0..reps)
            .into_par_iter()
            .map(|rep| {
                let arms = optimistic_tracking_counts_with(
                    &instance.dists,
                    distance,
                    n,
                    delta,
                    Some(instance.eta_or_margin()),
                    &cell.substream(rep),
                    adaptive.exploration_scale,
                )?;
                arms.iter()
                    .zip(&instance.dists)
                    .map(|(arm, d)| table.conditional_expected_distance(&kind, d, arm.pulls()))
                    .collect()
            })
            .collect();
        let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
        let mut scheme_risk = f64::NEG_INFINITY;
        let mut worst_se = 0.0;
        for arm in 0..instance.k() {
            let col: Vec<f64> = rows.iter().map(|r| r[arm]).collect();
            let mean = pairwise_sum(&col) / reps as f64;
            if mean > scheme_risk {
                scheme_risk = mean;
                let sq: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
                worst_se = (pairwise_sum(&sq) / (reps as f64 - 1.0) / reps as f64).sqrt();
            }
        }
        points.push(RegretRatePoint {
            n,
            regret: scheme_risk - oracle_risk,
            scheme_risk,
            oracle_risk,
            allocation_stderr: worst_se,
        });
    }
    let xs: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.regret).collect();
    Ok(RegretRateReport {
        distance: distance.name().to_string(),
        slope: fit_loglog_slope(&xs, &ys)?,
        points,
    })
}

/// One row of the lower-bound experiment: the worst-case (over the two
/// swapped instances and both arms) mean absolute deviation from the
/// approx-oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundPoint {
    pub distance: String,
    pub n: u64,
    pub epsilon: f64,
    pub worst_mean_abs_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub p0: f64,
    pub points: Vec<LowerBoundPoint>,
    /// Log-log slope per distance over the budget grid.
    pub slopes: Vec<(String, f64)>,
}

/// The two-instance construction: `P1 = (Ber(p0), Ber(p0 - eps))` and its
/// swap, with `eps = 1/(4 sqrt(n))` unless overridden. For each distance
/// and budget, measures `max` over instances and arms of the mean
/// `|T_i - T~_i*|` of the adaptive scheme.
pub fn lower_bound_experiment(
    p0: f64,
    distances: &[TrackedDistance],
    n_list: &[u64],
    eps_override: Option<f64>,
    reps: u64,
    stream: &RngStream,
    adaptive: &AdaptiveOptions,
) -> Result<LowerBoundReport> {
    if !(0.5 < p0 && p0 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p0 must lie in (1/2, 1), got {p0}"
        )));
    }
    let mut points = Vec::new();
    for (di, &distance) in distances.iter().enumerate() {
        for (ni, &n) in n_list.iter().enumerate() {
            let eps = eps_override.unwrap_or(1.0 / (4.0 * (n as f64).sqrt()));
            if eps >= p0 - 0.5 {
                return Err(Error::InvalidParameter(format!(
                    "epsilon {eps} must stay below p0 - 1/2"
                )));
            }
            let hi = DiscreteDistribution::bernoulli(p0)?;
            let lo = DiscreteDistribution::bernoulli(p0 - eps)?;
            let mut worst = 0.0f64;
            for (ii, pair) in [[hi.clone(), lo.clone()], [lo.clone(), hi.clone()]]
                .into_iter()
                .enumerate()
            {
                let instance = ProblemInstance::new(pair.to_vec(), None, "lower-bound")?;
                let oracle = distance.approx_oracle(&instance.dists, n as f64)?;
                let delta = adaptive
                    .delta
                    .unwrap_or_else(|| distance.default_delta(n, 2, instance.eta_or_margin()));
                let cell = stream
                    .substream(di as u64)
                    .substream(ni as u64)
                    .substream(ii as u64);
                let devs: Vec<Result<Vec<f64>>> = (0..reps)
                    .into_par_iter()
                    .map(|rep| {
                        let arms = optimistic_tracking_counts_with(
                            &instance.dists,
                            distance,
                            n,
                            delta,
                            Some(instance.eta_or_margin()),
                            &cell.substream(rep),
                            adaptive.exploration_scale,
                        )?;
                        Ok(arms
                            .iter()
                            .zip(&oracle.counts)
                            .map(|(a, &t)| (a.pulls() as f64 - t).abs())
                            .collect())
                    })
                    .collect();
                let devs: Vec<Vec<f64>> = devs.into_iter().collect::<Result<_>>()?;
                for arm in 0..2 {
                    let col: Vec<f64> = devs.iter().map(|d| d[arm]).collect();
                    worst = worst.max(pairwise_sum(&col) / reps as f64);
                }
            }
            points.push(LowerBoundPoint {
                distance: distance.name().to_string(),
                n,
                epsilon: eps,
                worst_mean_abs_dev: worst,
            });
        }
    }
    let mut slopes = Vec::new();
    for &distance in distances {
        let rows: Vec<&LowerBoundPoint> = points
            .iter()
            .filter(|p| p.distance == distance.name())
            .collect();
        let xs: Vec<f64> = rows.iter().map(|p| p.n as f64).collect();
        let ys: Vec<f64> = rows.iter().map(|p| p.worst_mean_abs_dev).collect();
        slopes.push((distance.name().to_string(), fit_loglog_slope(&xs, &ys)?));
    }
    Ok(LowerBoundReport { p0, points, slopes })
}
