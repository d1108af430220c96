//! Experiment runners: translate a resolved configuration into library
//! calls and CSV tables.

use alloctrack::harness::experiments::{
    deviation_rate, figure2_sweep, lower_bound_experiment, regret_rate, table1_gaps, EpsFamily,
};
use alloctrack::harness::{
    coverage_audit, estimate_risk, regret, AdaptiveOptions, ProblemInstance, Scheme,
};
use alloctrack::{DiscreteDistribution, DistanceKind, RngStream, TrackedDistance};
use anyhow::{anyhow, Context, Result};

use crate::config::{ExperimentKind, ResolvedConfig};
use crate::output::{Cell, OutputDir};

pub fn run(config: &ResolvedConfig, out: &mut OutputDir, verbose: bool) -> Result<()> {
    match config.experiment {
        ExperimentKind::Alloc => run_alloc(config, out),
        ExperimentKind::Simulate => run_simulate(config, out, verbose),
        ExperimentKind::Risk => run_risk(config, out),
        ExperimentKind::Regret => run_regret(config, out),
        ExperimentKind::Figure2 => run_figure2(config, out),
        ExperimentKind::Table1 => run_table1(config, out),
        ExperimentKind::Rates => run_rates(config, out),
        ExperimentKind::Lowerbound => run_lowerbound(config, out),
        ExperimentKind::Coverage => run_coverage(config, out),
    }
}

fn stream(config: &ResolvedConfig) -> RngStream {
    RngStream::new(config.seed)
}

fn adaptive_options(config: &ResolvedConfig) -> AdaptiveOptions {
    AdaptiveOptions {
        delta: config.delta,
        exploration_scale: config.exploration_scale,
    }
}

fn instance(config: &ResolvedConfig) -> Result<ProblemInstance> {
    let dists = config
        .dists
        .clone()
        .ok_or_else(|| anyhow!("this experiment needs explicit distributions"))?;
    ProblemInstance::new(dists, config.eta, "cli").context("building the problem instance")
}

/// The canonical two-arm pair used when a rate experiment is run without
/// explicit distributions.
fn default_pair() -> Vec<DiscreteDistribution> {
    vec![
        DiscreteDistribution::bernoulli(0.5).expect("valid"),
        DiscreteDistribution::bernoulli(0.9).expect("valid"),
    ]
}

fn tracked(kind: &DistanceKind) -> Result<TrackedDistance> {
    TrackedDistance::from_kind(kind).map_err(Into::into)
}

fn run_alloc(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let inst = instance(config)?;
    let n = config.n.expect("validated") as f64;
    let mut rows = Vec::new();
    for kind in &config.distances {
        let tracked = tracked(kind)?;
        let alloc = tracked.approx_oracle(&inst.dists, n)?;
        let ints = alloc.integer_counts();
        for (arm, dist) in inst.dists.iter().enumerate() {
            rows.push(vec![
                Cell::from(tracked.name()),
                Cell::from(arm),
                Cell::from(tracked.c_param(dist)?),
                Cell::from(alloc.counts[arm]),
                Cell::from(ints[arm]),
            ]);
        }
    }
    out.write_csv(
        "alloc.csv",
        &["distance", "arm", "c", "t_fractional", "t_integer"],
        &rows,
    )?;
    Ok(())
}

fn run_simulate(config: &ResolvedConfig, out: &mut OutputDir, verbose: bool) -> Result<()> {
    let inst = instance(config)?;
    let n = config.n.expect("validated");
    let options = adaptive_options(config);
    let mut rows = Vec::new();
    for kind in &config.distances {
        let tracked = tracked(kind)?;
        let delta = options
            .delta
            .unwrap_or_else(|| tracked.default_delta(n, inst.k(), inst.eta_or_margin()));
        let (streams, order) = alloctrack::allocators::default_streams(inst.k(), &stream(config));
        let traj = alloctrack::allocators::optimistic_tracking_custom(
            &inst.dists,
            tracked,
            n,
            delta,
            Some(inst.eta_or_margin()),
            &streams,
            &order,
            &alloctrack::allocators::TrackingOptions {
                exploration_scale: options.exploration_scale,
                keep_rounds: verbose,
            },
        )?;
        for arm in &traj.arms {
            rows.push(vec![
                Cell::from(tracked.name()),
                Cell::from(arm.arm_id),
                Cell::from(arm.pulls()),
            ]);
        }
        if verbose {
            out.write_jsonl(&format!("simulate_{}.jsonl", tracked.name()), &traj.rounds)?;
        }
    }
    out.write_csv("simulate.csv", &["distance", "arm", "pulls"], &rows)?;
    Ok(())
}

fn schemes(config: &ResolvedConfig) -> Vec<Scheme> {
    match config.scheme.as_deref() {
        Some("uniform") => vec![Scheme::Uniform],
        Some("oracle") => vec![Scheme::Oracle],
        Some("adaptive") => vec![Scheme::Adaptive],
        _ => vec![Scheme::Uniform, Scheme::Oracle, Scheme::Adaptive],
    }
}

fn run_risk(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let inst = instance(config)?;
    let n = config
        .n
        .ok_or_else(|| anyhow!("the risk experiment needs a budget n"))?;
    let reps = config.reps.unwrap_or(2000);
    let options = adaptive_options(config);
    let mut rows = Vec::new();
    for kind in &config.distances {
        for scheme in schemes(config) {
            let est = estimate_risk(scheme, &inst, kind, n, reps, &stream(config), &options)?;
            for arm in 0..inst.k() {
                rows.push(vec![
                    Cell::from(kind.name()),
                    Cell::from(scheme.name()),
                    Cell::from(arm),
                    Cell::from(est.per_arm_mean[arm]),
                    Cell::from(est.per_arm_stderr[arm]),
                    Cell::from(est.risk),
                    Cell::from(est.risk_stderr),
                    Cell::from(est.mean_of_max),
                    Cell::from(est.reps),
                ]);
            }
        }
    }
    out.write_csv(
        "risk.csv",
        &[
            "distance",
            "scheme",
            "arm",
            "mean_distance",
            "stderr",
            "risk",
            "risk_stderr",
            "mean_of_max",
            "reps",
        ],
        &rows,
    )?;
    Ok(())
}

fn run_regret(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let inst = instance(config)?;
    let n = config
        .n
        .ok_or_else(|| anyhow!("the regret experiment needs a budget n"))?;
    let reps = config.reps.unwrap_or(2000);
    let options = adaptive_options(config);
    let scheme = match config.scheme.as_deref() {
        Some("uniform") => Scheme::Uniform,
        Some("oracle") => Scheme::Oracle,
        _ => Scheme::Adaptive,
    };
    let mut rows = Vec::new();
    for kind in &config.distances {
        let report = regret(scheme, &inst, kind, n, reps, &stream(config), &options)?;
        rows.push(vec![
            Cell::from(kind.name()),
            Cell::from(scheme.name()),
            Cell::from(n),
            Cell::from(report.scheme_risk.risk),
            Cell::from(report.scheme_risk.risk_stderr),
            Cell::from(report.oracle_risk.risk),
            Cell::from(report.oracle_risk.risk_stderr),
            Cell::from(report.regret),
            Cell::from(report.combined_stderr),
            Cell::from(report.phi_at_oracle.unwrap_or(f64::NAN)),
            Cell::from(report.tracking_term.unwrap_or(f64::NAN)),
            Cell::from(report.theory.map(|t| t.m_const).unwrap_or(f64::NAN)),
            Cell::from(
                report
                    .theory
                    .map(|t| t.leading_regret_term)
                    .unwrap_or(f64::NAN),
            ),
        ]);
    }
    out.write_csv(
        "regret.csv",
        &[
            "distance",
            "scheme",
            "n",
            "scheme_risk",
            "scheme_stderr",
            "oracle_risk",
            "oracle_stderr",
            "regret",
            "combined_stderr",
            "phi_at_oracle",
            "tracking_term",
            "theory_m",
            "theory_leading_term",
        ],
        &rows,
    )?;
    Ok(())
}

fn tracked_list(config: &ResolvedConfig) -> Result<Vec<TrackedDistance>> {
    config.distances.iter().map(tracked).collect()
}

fn run_figure2(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let family = EpsFamily::new(config.family_l)?;
    let records = figure2_sweep(
        &family,
        &tracked_list(config)?,
        &config.n_list,
        &config.eps_list,
        config.reps.unwrap_or(200),
        &stream(config),
        &adaptive_options(config),
    )?;
    let rows: Vec<Vec<Cell>> = records
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.distance.clone()),
                Cell::from(r.epsilon),
                Cell::from(r.n),
                Cell::from(r.approx_oracle_t2),
                Cell::from(r.adaptive_t2_mean),
                Cell::from(r.adaptive_t2_std),
            ]
        })
        .collect();
    out.write_csv(
        "figure2.csv",
        &[
            "distance",
            "epsilon",
            "n",
            "approx_oracle_t2",
            "adaptive_t2_mean",
            "adaptive_t2_std",
        ],
        &rows,
    )?;
    Ok(())
}

fn run_table1(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let family = EpsFamily::new(config.family_l)?;
    let records = table1_gaps(
        &family,
        &tracked_list(config)?,
        config.n.unwrap_or(500),
        &config.eps_list,
        config.reps.unwrap_or(2000),
        &stream(config),
        &adaptive_options(config),
    )?;
    let rows: Vec<Vec<Cell>> = records
        .iter()
        .map(|r| {
            vec![
                Cell::from(r.distance.clone()),
                Cell::from(r.epsilon),
                Cell::from(r.n),
                Cell::from(r.uniform_risk),
                Cell::from(r.uniform_stderr),
                Cell::from(r.adaptive_risk),
                Cell::from(r.adaptive_stderr),
                Cell::from(r.gap),
                Cell::from(r.gap_stderr),
            ]
        })
        .collect();
    out.write_csv(
        "table1.csv",
        &[
            "distance",
            "epsilon",
            "n",
            "uniform_risk",
            "uniform_stderr",
            "adaptive_risk",
            "adaptive_stderr",
            "gap",
            "gap_stderr",
        ],
        &rows,
    )?;
    Ok(())
}

fn run_rates(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let dists = config.dists.clone().unwrap_or_else(default_pair);
    let inst = ProblemInstance::new(dists, config.eta, "rates")?;
    let options = adaptive_options(config);
    let dev_reps = config.reps.unwrap_or(200);
    let mut rows = Vec::new();
    for kind in &config.distances {
        let tracked = tracked(kind)?;
        let dev = deviation_rate(
            &inst,
            tracked,
            &config.n_list,
            dev_reps,
            &stream(config).substream(1),
            &options,
        )?;
        for p in &dev.points {
            rows.push(vec![
                Cell::from(tracked.name()),
                Cell::from("deviation"),
                Cell::from(p.n),
                Cell::from(p.mean_max_abs_dev),
                Cell::from(p.std_max_abs_dev),
                Cell::from(dev.slope),
            ]);
        }
        let reg = regret_rate(
            &inst,
            tracked,
            &config.n_list,
            |n| config.reps.unwrap_or_else(|| (400_000 / n).clamp(200, 800)),
            &stream(config).substream(2),
            &options,
        )?;
        for p in &reg.points {
            rows.push(vec![
                Cell::from(tracked.name()),
                Cell::from("regret"),
                Cell::from(p.n),
                Cell::from(p.regret),
                Cell::from(p.allocation_stderr),
                Cell::from(reg.slope),
            ]);
        }
    }
    out.write_csv(
        "rates.csv",
        &["distance", "metric", "n", "value", "spread", "slope"],
        &rows,
    )?;
    Ok(())
}

fn run_lowerbound(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let report = lower_bound_experiment(
        config.p0,
        &tracked_list(config)?,
        &config.n_list,
        config.epsilon,
        config.reps.unwrap_or(200),
        &stream(config),
        &adaptive_options(config),
    )?;
    let mut rows = Vec::new();
    for p in &report.points {
        let slope = report
            .slopes
            .iter()
            .find(|(d, _)| *d == p.distance)
            .map(|(_, s)| *s)
            .unwrap_or(f64::NAN);
        rows.push(vec![
            Cell::from(p.distance.clone()),
            Cell::from(p.n),
            Cell::from(p.epsilon),
            Cell::from(p.worst_mean_abs_dev),
            Cell::from(slope),
        ]);
    }
    out.write_csv(
        "lowerbound.csv",
        &["distance", "n", "epsilon", "worst_mean_abs_dev", "slope"],
        &rows,
    )?;
    Ok(())
}

fn run_coverage(config: &ResolvedConfig, out: &mut OutputDir) -> Result<()> {
    let inst = instance(config)?;
    let n = config.n.unwrap_or(200);
    let delta = config.delta.unwrap_or(0.1);
    let reps = config.reps.unwrap_or(2000);
    let mut rows = Vec::new();
    for kind in &config.distances {
        let tracked = tracked(kind)?;
        let coverage = coverage_audit(tracked, &inst, n, delta, reps, &stream(config))?;
        rows.push(vec![
            Cell::from(tracked.name()),
            Cell::from(n),
            Cell::from(delta),
            Cell::from(reps),
            Cell::from(coverage),
        ]);
    }
    out.write_csv(
        "coverage.csv",
        &["distance", "n", "delta", "reps", "coverage"],
        &rows,
    )?;
    Ok(())
}
