//! Seeded Monte Carlo checks of the concentration constructions, the
//! remainder calibration, and tracking behavior.

use alloctrack::harness::experiments::{figure2_sweep, EpsFamily};
use alloctrack::harness::{
    estimate_risk, event_coverage, exact_risk_enumeration, AdaptiveOptions, BinomialTable,
    EventKind, ProblemInstance, Scheme,
};
use alloctrack::objectives::TaylorSpec;
use alloctrack::{
    coverage_audit, kl_remainder_constant, optimistic_tracking_counts, radius_hoeffding,
    remainder_bound, taylor_f_div, ArmState, BoundFamily, ConfidenceSchedule,
    DiscreteDistribution, DistanceKind, RngStream, TrackedDistance,
};

fn ber(p: f64) -> DiscreteDistribution {
    DiscreteDistribution::bernoulli(p).unwrap()
}

fn pair(p: f64, q: f64) -> ProblemInstance {
    ProblemInstance::new(vec![ber(p), ber(q)], None, "pair").unwrap()
}

#[test]
fn mc_risk_matches_enumeration_small_cases() {
    let stream = RngStream::new(101);
    let cases: [(DistanceKind, DiscreteDistribution, u64, f64); 3] = [
        (DistanceKind::L2Sq, ber(0.5), 10, 0.05),
        (DistanceKind::L1, ber(0.5), 2, 0.5),
        (DistanceKind::Separation, ber(0.5), 2, 0.5),
    ];
    for (i, (kind, dist, t, want)) in cases.into_iter().enumerate() {
        let exact = exact_risk_enumeration(&dist, &kind, t).unwrap();
        assert!((exact - want).abs() < 1e-12, "{kind:?}: exact {exact}");
        let inst = ProblemInstance::new(vec![dist], None, "one").unwrap();
        let est = estimate_risk(
            Scheme::Uniform,
            &inst,
            &kind,
            t,
            30_000,
            &stream.substream(i as u64),
            &AdaptiveOptions::default(),
        )
        .unwrap();
        assert!(
            (est.risk - exact).abs() <= 3.0 * est.risk_stderr,
            "{kind:?}: mc {} vs exact {exact} (se {})",
            est.risk,
            est.risk_stderr
        );
    }
}

#[test]
fn concentration_events_hold_at_their_budget() {
    let inst = pair(0.5, 0.8);
    let stream = RngStream::new(77);
    for (i, event) in [EventKind::RelChernoff, EventKind::StdDev, EventKind::Hoeffding]
        .into_iter()
        .enumerate()
    {
        let coverage =
            event_coverage(event, &inst, 200, 0.1, 1000, &stream.substream(i as u64)).unwrap();
        assert!(coverage >= 0.9, "{event:?} coverage = {coverage}");
    }
}

#[test]
fn bound_coverage_exceeds_target() {
    // 10^4 runs of the published rule: the l2 upper bound covers the true
    // parameter at every round in comfortably more than 90% of them.
    let inst = pair(0.5, 0.8);
    let cov = coverage_audit(
        TrackedDistance::L2Sq,
        &inst,
        200,
        0.1,
        10_000,
        &RngStream::new(5150),
    )
    .unwrap();
    assert!(cov >= 0.9, "coverage = {cov}");
}

/// Round-robin sampler that evaluates a check at every round for one arm.
fn round_robin_audit(
    dist: &DiscreteDistribution,
    sched: &ConfidenceSchedule,
    n: u64,
    reps: u64,
    stream: &RngStream,
    mut check: impl FnMut(&ArmState, u64, f64),
) {
    for rep in 0..reps {
        let mut rng = stream.substream(rep).rng();
        let mut arm = ArmState::new(0, dist.len());
        for t in 1..=n {
            arm.record(dist.sample(&mut rng));
            let e = radius_hoeffding(sched, t, arm.pulls()).unwrap();
            check(&arm, t, e);
        }
    }
}

#[test]
fn kl_parameter_sandwich_holds_under_event() {
    // Whenever the per-symbol Hoeffding event and the 7e/2 gate both hold,
    // the inverse-mass sum is bracketed by the true sum and the true sum
    // plus the eta-dependent width.
    let dist = DiscreteDistribution::new(&[0.3, 0.3, 0.4]).unwrap();
    let eta = 0.3;
    let l = dist.len() as f64;
    let sched = ConfidenceSchedule::new(BoundFamily::Hoeffding, 0.1, 1, dist.len()).unwrap();
    let true_sum: f64 = dist.probs().iter().map(|p| 1.0 / p).sum();
    let mut gate_hits = 0u64;
    // The published gate needs several thousand pulls to clear at these
    // masses, so the audit runs a long horizon with few replications.
    round_robin_audit(&dist, &sched, 20_000, 8, &RngStream::new(90), |arm, t, e| {
        let pulls = arm.pulls() as f64;
        let in_event = arm
            .counts()
            .iter()
            .zip(dist.probs())
            .all(|(&c, &p)| (c as f64 / pulls - p).abs() <= e);
        let gate = arm
            .counts()
            .iter()
            .all(|&c| c as f64 / pulls >= 3.5 * e);
        if !(in_event && gate) {
            return;
        }
        gate_hits += 1;
        let plug_sum: f64 = arm
            .counts()
            .iter()
            .map(|&c| 1.0 / (c as f64 / pulls - e))
            .sum();
        let width = l / (eta * eta)
            * (32.0 * l * l * (2.0 / sched.delta_t(t)).ln() / pulls).sqrt();
        // The library exposes the same width on the c scale (divided by 12).
        let lib_width =
            alloctrack::confidence::kl_eta_radius(&sched, t, arm.pulls(), eta).unwrap();
        assert!((lib_width * 12.0 - width).abs() <= 1e-9 * width);
        assert!(plug_sum >= true_sum - 1e-9, "lower side failed");
        assert!(plug_sum <= true_sum + width + 1e-9, "upper side failed");
    });
    assert!(gate_hits > 1000, "gate opened only {gate_hits} times");
}

#[test]
fn separation_parameter_sandwich_holds_under_event() {
    // Same event and gate; the square-root sums are bracketed with the
    // envelope under its tighter (min) reading, which implies the wider
    // (max) reading as well.
    let dist = ber(0.4);
    let eta = 0.4;
    let l = dist.len() as f64;
    let sched = ConfidenceSchedule::new(BoundFamily::Hoeffding, 0.1, 1, dist.len()).unwrap();
    let true_sum: f64 = dist.probs().iter().map(|p| (1.0 / p - 1.0).sqrt()).sum();
    let mut gate_hits = 0u64;
    round_robin_audit(&dist, &sched, 12_000, 10, &RngStream::new(91), |arm, t, e| {
        let pulls = arm.pulls() as f64;
        let in_event = arm
            .counts()
            .iter()
            .zip(dist.probs())
            .all(|(&c, &p)| (c as f64 / pulls - p).abs() <= e);
        let gate = arm
            .counts()
            .iter()
            .all(|&c| c as f64 / pulls >= 3.5 * e);
        if !(in_event && gate) {
            return;
        }
        gate_hits += 1;
        let plug_sum: f64 = arm
            .counts()
            .iter()
            .map(|&c| (1.0 / (c as f64 / pulls - e) - 1.0).max(0.0).sqrt())
            .sum();
        let a = (32.0 * (2.0 / sched.delta_t(t)).ln() / pulls).powf(0.25);
        let b_min = (l * a / eta) * (a / (2.0 * eta.powf(1.5))).min(1.0);
        let b_max = (l * a / eta) * (a / (2.0 * eta.powf(1.5))).max(1.0);
        let diag =
            alloctrack::confidence::sep_diagnostics(&sched, t, arm.pulls(), eta).unwrap();
        assert!((diag.a - a).abs() <= 1e-12 * a);
        assert!((diag.b_min_reading - b_min).abs() <= 1e-9 * b_min.max(1e-12));
        assert!((diag.b_max_reading - b_max).abs() <= 1e-9 * b_max.max(1e-12));
        assert!(plug_sum >= true_sum - 1e-9, "lower side failed");
        assert!(
            plug_sum <= true_sum + b_min + 1e-9,
            "upper side failed even under the wide reading {b_max}"
        );
    });
    assert!(gate_hits > 1000, "gate opened only {gate_hits} times");
}

#[test]
fn kl_remainder_bound_dominates_exact_remainder() {
    // E[KL] - E[5-term approximation], computed exactly per symbol with
    // binomial sums, stays below the calibrated remainder bound.
    let dist = ber(0.5);
    let spec = TaylorSpec::kl(5).with_remainder_constant(kl_remainder_constant(5, 0.5).unwrap());
    for t in [16u64, 64, 256] {
        let table = BinomialTable::new(t);
        let exact_kl = table
            .conditional_expected_distance(&DistanceKind::Kl, &dist, t)
            .unwrap();
        // Exact expected truncated objective, by the same outcome sum.
        let mut approx = 0.0;
        let mut ln_fact = vec![0.0f64; t as usize + 1];
        for i in 1..=t as usize {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        for k in 0..=t {
            let ln_pmf = ln_fact[t as usize]
                - ln_fact[k as usize]
                - ln_fact[(t - k) as usize]
                + k as f64 * 0.5f64.ln()
                + (t - k) as f64 * 0.5f64.ln();
            let empirical =
                DiscreteDistribution::new(&[k as f64 / t as f64, (t - k) as f64 / t as f64])
                    .unwrap();
            approx += ln_pmf.exp() * taylor_f_div(&spec, &empirical, &dist).unwrap();
        }
        let remainder = (exact_kl - approx).abs();
        let bound: f64 = dist
            .probs()
            .iter()
            .map(|&p| remainder_bound(&spec, p, t as f64).unwrap())
            .sum();
        assert!(
            remainder <= bound,
            "t = {t}: remainder {remainder} vs bound {bound}"
        );
    }
}

#[test]
fn tracking_fraction_approaches_oracle_share() {
    // Mean final share of the second arm over 200 runs lands within 0.05
    // of the oracle fraction 0.18/0.68.
    let dists = vec![ber(0.5), ber(0.9)];
    let n = 2000u64;
    let stream = RngStream::new(606);
    let mut total = 0.0;
    for rep in 0..200u64 {
        let arms = optimistic_tracking_counts(
            &dists,
            TrackedDistance::L2Sq,
            n,
            1.0 / n as f64,
            None,
            &stream.substream(rep),
        )
        .unwrap();
        total += arms[1].pulls() as f64 / n as f64;
    }
    let mean = total / 200.0;
    let oracle = 0.18 / 0.68;
    assert!((mean - oracle).abs() < 0.05, "mean share {mean} vs {oracle}");
}

#[test]
fn empirical_distribution_converges_in_l1() {
    let dist = DiscreteDistribution::new(&[0.5, 0.3, 0.2]).unwrap();
    let stream = RngStream::new(321);
    let reps = 600u64;
    let mut stats = Vec::new();
    for (i, pulls) in [100u64, 200, 400, 800].into_iter().enumerate() {
        let mut values = Vec::new();
        for rep in 0..reps {
            let mut rng = stream.substream((i as u64) << 32 | rep).rng();
            let mut arm = ArmState::new(0, 3);
            for _ in 0..pulls {
                arm.record(dist.sample(&mut rng));
            }
            values.push(
                alloctrack::distance(&DistanceKind::L1, &arm.empirical().unwrap(), &dist)
                    .unwrap(),
            );
        }
        let mean: f64 = values.iter().sum::<f64>() / reps as f64;
        let var: f64 =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps as f64 - 1.0);
        stats.push((mean, (var / reps as f64).sqrt()));
    }
    for w in stats.windows(2) {
        let (m0, s0) = w[0];
        let (m1, s1) = w[1];
        let slack = 3.0 * (s0 * s0 + s1 * s1).sqrt();
        assert!(m1 < m0 + slack, "no shrink: {m0} -> {m1} (slack {slack})");
    }
}

#[test]
fn symmetric_eps_gives_even_split() {
    // At eps = 1/l the family's two arms coincide, so both the oracle and
    // the adaptive scheme split the budget evenly up to noise.
    let family = EpsFamily::new(10).unwrap();
    let records = figure2_sweep(
        &family,
        &[TrackedDistance::L2Sq],
        &[400],
        &[0.1],
        200,
        &RngStream::new(11),
        &AdaptiveOptions::default(),
    )
    .unwrap();
    let rec = &records[0];
    assert!((rec.approx_oracle_t2 - 200.0).abs() < 1e-9);
    let se = rec.adaptive_t2_std / (200f64).sqrt();
    assert!(
        (rec.adaptive_t2_mean - 200.0).abs() <= 4.0 * se + 1.0,
        "mean T2 = {} (sd {})",
        rec.adaptive_t2_mean,
        rec.adaptive_t2_std
    );
}

#[test]
fn deviation_slopes_for_l1_and_separation() {
    // The allocation error of the l1 and separation trackers also grows
    // like sqrt(n) (slope inside [0.3, 0.7]) on the canonical pair.
    let inst = pair(0.5, 0.9);
    let stream = RngStream::new(404);
    for (i, tracked) in [TrackedDistance::L1, TrackedDistance::Separation]
        .into_iter()
        .enumerate()
    {
        let rep = alloctrack::harness::experiments::deviation_rate(
            &inst,
            tracked,
            &[500, 1000, 2000, 4000, 8000],
            150,
            &stream.substream(i as u64),
            &AdaptiveOptions::default(),
        )
        .unwrap();
        assert!(
            (0.3..=0.7).contains(&rep.slope),
            "{}: slope {}",
            tracked.name(),
            rep.slope
        );
    }
}

#[test]
fn lower_bound_deviation_grows_at_least_sqrt_n() {
    let report = alloctrack::harness::experiments::lower_bound_experiment(
        0.75,
        &[TrackedDistance::L2Sq],
        &[500, 1000, 2000, 4000, 8000],
        None,
        150,
        &RngStream::new(505),
        &AdaptiveOptions::default(),
    )
    .unwrap();
    let (_, slope) = report.slopes[0];
    assert!(slope >= 0.3, "lower-bound slope {slope}");
    for w in report.points.windows(2) {
        assert!(w[1].worst_mean_abs_dev > w[0].worst_mean_abs_dev);
    }
}

#[test]
fn kl_oracle_near_uniform_across_family_skews() {
    // On the two-arm eps family the equalized KL allocation stays within
    // (c_max - c_min)/(l - 1) of the even split for every skew.
    let family = EpsFamily::new(10).unwrap();
    for i in 1..=9 {
        let eps = i as f64 / 10.0;
        let inst = family.instance(eps).unwrap();
        let cs: Vec<f64> = inst
            .dists
            .iter()
            .map(|d| alloctrack::c_kl(d).unwrap())
            .collect();
        let n = 500.0;
        let alloc = alloctrack::oracle_kl(&cs, 10, n).unwrap();
        let bound = (cs[0] - cs[1]).abs() / 9.0;
        for &t in &alloc.counts {
            assert!(
                (t - 250.0).abs() <= bound + 1e-6,
                "eps {eps}: |{t} - 250| beyond {bound}"
            );
        }
    }
}

#[test]
fn kl_uniform_and_adaptive_risks_agree() {
    // On the eps family at n = 500 the KL gate stays closed, the adaptive
    // scheme round-robins, and with shared draws the risks coincide.
    let family = EpsFamily::new(10).unwrap();
    let inst = family.instance(0.5).unwrap();
    let stream = RngStream::new(88);
    let options = AdaptiveOptions::default();
    let uniform = estimate_risk(
        Scheme::Uniform,
        &inst,
        &DistanceKind::Kl,
        500,
        500,
        &stream,
        &options,
    )
    .unwrap();
    let adaptive = estimate_risk(
        Scheme::Adaptive,
        &inst,
        &DistanceKind::Kl,
        500,
        500,
        &stream,
        &options,
    )
    .unwrap();
    let combined =
        (uniform.risk_stderr.powi(2) + adaptive.risk_stderr.powi(2)).sqrt();
    assert!(
        (uniform.risk - adaptive.risk).abs() <= 2.0 * combined.max(1e-12),
        "uniform {} vs adaptive {}",
        uniform.risk,
        adaptive.risk
    );
}
