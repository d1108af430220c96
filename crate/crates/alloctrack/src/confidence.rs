//! Confidence schedules, per-symbol concentration radii, and the per-arm
//! optimistic upper bounds `u_{i,t}` plugged into the tracking algorithm.
//!
//! A schedule spreads a total failure budget `delta` over rounds, arms and
//! symbols as `delta_t = numerator * delta / (K l pi^2 t^2)`; summed over
//! all rounds, arms and symbols this never exceeds `delta`. `t` is the
//! global round counter of the tracking loop, not the per-arm pull count.

use serde::{Deserialize, Serialize};

use crate::distributions::ArmState;
use crate::error::{Error, Result};

/// Which concentration inequality the schedule budgets for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundFamily {
    /// Relative (multiplicative) Chernoff; numerator 6.
    RelChernoff,
    /// Standard-deviation (empirical Bernstein style) bound; numerator 3.
    EmpBernstein,
    /// Additive Chernoff-Hoeffding; numerator 6.
    Hoeffding,
}

impl BoundFamily {
    pub fn numerator(self) -> f64 {
        match self {
            BoundFamily::RelChernoff | BoundFamily::Hoeffding => 6.0,
            BoundFamily::EmpBernstein => 3.0,
        }
    }
}

/// The `delta -> delta_t` pipeline for one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSchedule {
    pub delta: f64,
    pub arms: usize,
    pub alphabet: usize,
    pub family: BoundFamily,
}

impl ConfidenceSchedule {
    pub fn new(family: BoundFamily, delta: f64, arms: usize, alphabet: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        if arms == 0 || alphabet < 2 {
            return Err(Error::InvalidParameter(
                "schedule needs at least one arm and a binary alphabet".into(),
            ));
        }
        Ok(Self {
            delta,
            arms,
            alphabet,
            family,
        })
    }

    /// Per-(round, arm, symbol) budget at round `t >= 1`.
    pub fn delta_t(&self, t: u64) -> f64 {
        let t = t as f64;
        self.family.numerator() * self.delta
            / (self.arms as f64 * self.alphabet as f64 * std::f64::consts::PI.powi(2) * t * t)
    }
}

/// A typed optimistic value: finite, or the dominating +infinity sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperBound {
    Finite(f64),
    Infinite,
}

impl Serialize for UpperBound {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            UpperBound::Finite(v) => s.serialize_f64(*v),
            UpperBound::Infinite => s.serialize_str("inf"),
        }
    }
}

impl UpperBound {
    pub fn is_infinite(&self) -> bool {
        matches!(self, UpperBound::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            UpperBound::Finite(v) => Some(*v),
            UpperBound::Infinite => None,
        }
    }
}

/// Optimistic upper bound on one arm's objective parameter.
///
/// `c_hat` and `radius` are `None` before the first pull and whenever a
/// gate failure leaves the plug-in estimate undefined; the bound itself is
/// then the infinite sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmBound {
    pub c_hat: Option<f64>,
    pub radius: Option<f64>,
    pub upper: UpperBound,
}

impl ArmBound {
    fn infinite(c_hat: Option<f64>) -> Self {
        Self {
            c_hat,
            radius: None,
            upper: UpperBound::Infinite,
        }
    }

    fn finite(c_hat: f64, upper: f64) -> Self {
        Self {
            c_hat: Some(c_hat),
            radius: Some(upper - c_hat),
            upper: UpperBound::Finite(upper),
        }
    }
}

/// Additive Chernoff-Hoeffding radius `sqrt(2 log(2/delta_t) / pulls)`.
pub fn radius_hoeffding(sched: &ConfidenceSchedule, t: u64, pulls: u64) -> Result<f64> {
    if pulls == 0 {
        return Err(Error::ZeroPulls);
    }
    Ok((2.0 * (2.0 / sched.delta_t(t)).ln() / pulls as f64).sqrt())
}

/// Radius of the squared-l2 parameter interval,
/// `sqrt(27 log(1/delta_t) / pulls)`.
pub fn radius_l2(sched: &ConfidenceSchedule, t: u64, pulls: u64) -> Result<f64> {
    if pulls == 0 {
        return Err(Error::ZeroPulls);
    }
    Ok((27.0 * (1.0 / sched.delta_t(t)).ln() / pulls as f64).sqrt())
}

/// Radius of the l1 parameter interval, the sum of `l` per-symbol
/// standard-deviation radii: `sqrt(2 l^2 log(2/delta_t) / pulls)`.
pub fn radius_l1(sched: &ConfidenceSchedule, t: u64, pulls: u64) -> Result<f64> {
    Ok(sched.alphabet as f64 * radius_hoeffding(sched, t, pulls)?)
}

fn empirical_masses(arm: &ArmState) -> impl Iterator<Item = f64> + '_ {
    let t = arm.pulls() as f64;
    arm.counts().iter().map(move |&c| c as f64 / t)
}

/// Upper bound for the squared-l2 parameter `1 - sum p^2`.
pub fn upper_l2(sched: &ConfidenceSchedule, arm: &ArmState, t: u64) -> ArmBound {
    upper_l2_scaled(sched, arm, t, 1.0)
}

pub(crate) fn upper_l2_scaled(
    sched: &ConfidenceSchedule,
    arm: &ArmState,
    t: u64,
    scale: f64,
) -> ArmBound {
    if arm.pulls() == 0 {
        return ArmBound::infinite(None);
    }
    let c_hat = 1.0 - empirical_masses(arm).map(|p| p * p).sum::<f64>();
    let radius = scale * radius_l2(sched, t, arm.pulls()).expect("pulls checked above");
    ArmBound::finite(c_hat, c_hat + radius)
}

/// Upper bound for the l1 parameter `sum sqrt(p (1 - p))`.
pub fn upper_l1(sched: &ConfidenceSchedule, arm: &ArmState, t: u64) -> ArmBound {
    upper_l1_scaled(sched, arm, t, 1.0)
}

pub(crate) fn upper_l1_scaled(
    sched: &ConfidenceSchedule,
    arm: &ArmState,
    t: u64,
    scale: f64,
) -> ArmBound {
    if arm.pulls() == 0 {
        return ArmBound::infinite(None);
    }
    let c_hat = empirical_masses(arm)
        .map(|p| (p * (1.0 - p)).sqrt())
        .sum::<f64>();
    let radius = scale * radius_l1(sched, t, arm.pulls()).expect("pulls checked above");
    ArmBound::finite(c_hat, c_hat + radius)
}

fn validate_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1/2), got {eta}"
        )));
    }
    Ok(())
}

/// Per-symbol gate shared by the KL and separation bounds: every empirical
/// mass must clear 7/2 of the Hoeffding radius.
fn gate_passes(arm: &ArmState, e: f64) -> bool {
    empirical_masses(arm).all(|p| p >= 3.5 * e)
}

fn plug_in_c_kl(arm: &ArmState) -> Option<f64> {
    let mut inv_sum = 0.0;
    for p in empirical_masses(arm) {
        if p == 0.0 {
            return None;
        }
        inv_sum += 1.0 / p;
    }
    Some((inv_sum - 1.0) / 12.0)
}

/// Upper bound for the KL parameter `(sum 1/p - 1) / 12`. Valid for
/// distributions in the eta-interior; `eta` does not enter the value.
///
/// When the gate passes for every symbol the bound is
/// `(sum 1/(p-hat - e) - 1) / 12`; otherwise the infinite sentinel.
pub fn upper_kl(sched: &ConfidenceSchedule, arm: &ArmState, t: u64, eta: f64) -> Result<ArmBound> {
    upper_kl_scaled(sched, arm, t, eta, 1.0)
}

pub(crate) fn upper_kl_scaled(
    sched: &ConfidenceSchedule,
    arm: &ArmState,
    t: u64,
    eta: f64,
    scale: f64,
) -> Result<ArmBound> {
    validate_eta(eta)?;
    if arm.pulls() == 0 {
        return Ok(ArmBound::infinite(None));
    }
    let e = scale * radius_hoeffding(sched, t, arm.pulls())?;
    if !gate_passes(arm, e) {
        return Ok(ArmBound::infinite(plug_in_c_kl(arm)));
    }
    let inv_sum: f64 = empirical_masses(arm).map(|p| 1.0 / (p - e)).sum();
    let upper = (inv_sum - 1.0) / 12.0;
    let c_hat = plug_in_c_kl(arm).expect("gate guarantees positive masses");
    Ok(ArmBound::finite(c_hat, upper))
}

/// The eta-dependent width of the KL parameter interval,
/// `(l / eta^2) sqrt(32 l^2 log(2/delta_t) / pulls) / 12`, on the same
/// scale as the KL `c`. Diagnostic companion to [`upper_kl`].
pub fn kl_eta_radius(sched: &ConfidenceSchedule, t: u64, pulls: u64, eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    if pulls == 0 {
        return Err(Error::ZeroPulls);
    }
    let l = sched.alphabet as f64;
    Ok(l / (eta * eta)
        * (32.0 * l * l * (2.0 / sched.delta_t(t)).ln() / pulls as f64).sqrt()
        / 12.0)
}

fn plug_in_c_sep_scaled(arm: &ArmState) -> Option<f64> {
    let mut acc = 0.0;
    for p in empirical_masses(arm) {
        if p == 0.0 {
            return None;
        }
        acc += ((1.0 - p) / p).sqrt();
    }
    Some(acc / (2.0 * std::f64::consts::PI).sqrt())
}

/// Upper bound for the separation parameter, already divided by
/// `sqrt(2 pi)`: `sum sqrt(1/(p-hat - e) - 1) / sqrt(2 pi)` behind the
/// same gate as [`upper_kl`]. A radicand driven below zero is clamped to
/// zero, preserving the upper-bound direction.
pub fn upper_sep(sched: &ConfidenceSchedule, arm: &ArmState, t: u64, eta: f64) -> Result<ArmBound> {
    upper_sep_scaled(sched, arm, t, eta, 1.0)
}

pub(crate) fn upper_sep_scaled(
    sched: &ConfidenceSchedule,
    arm: &ArmState,
    t: u64,
    eta: f64,
    scale: f64,
) -> Result<ArmBound> {
    validate_eta(eta)?;
    if arm.pulls() == 0 {
        return Ok(ArmBound::infinite(None));
    }
    let e = scale * radius_hoeffding(sched, t, arm.pulls())?;
    if !gate_passes(arm, e) {
        return Ok(ArmBound::infinite(plug_in_c_sep_scaled(arm)));
    }
    let sum: f64 = empirical_masses(arm)
        .map(|p| (1.0 / (p - e) - 1.0).max(0.0).sqrt())
        .sum();
    let upper = sum / (2.0 * std::f64::consts::PI).sqrt();
    let c_hat = plug_in_c_sep_scaled(arm).expect("gate guarantees positive masses");
    Ok(ArmBound::finite(c_hat, upper))
}

/// Diagnostics for the separation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SepDiagnostics {
    /// `a_{i,t} = (32 log(2/delta_t) / pulls)^(1/4)`.
    pub a: f64,
    /// `b_{i,t}` under the `max{1, a / (2 eta^(3/2))}` reading.
    pub b_max_reading: f64,
    /// `b_{i,t}` under the `min{1, a / (2 eta^(3/2))}` reading.
    pub b_min_reading: f64,
}

/// Both printed readings of the separation envelope `b_{i,t}`; the bound
/// value itself does not depend on `b`.
pub fn sep_diagnostics(
    sched: &ConfidenceSchedule,
    t: u64,
    pulls: u64,
    eta: f64,
) -> Result<SepDiagnostics> {
    validate_eta(eta)?;
    if pulls == 0 {
        return Err(Error::ZeroPulls);
    }
    let a = (32.0 * (2.0 / sched.delta_t(t)).ln() / pulls as f64).powf(0.25);
    let scale = sched.alphabet as f64 * a / eta;
    let ratio = a / (2.0 * eta.powf(1.5));
    Ok(SepDiagnostics {
        a,
        b_max_reading: scale * ratio.max(1.0),
        b_min_reading: scale * ratio.min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(family: BoundFamily, delta: f64, arms: usize, alphabet: usize) -> ConfidenceSchedule {
        ConfidenceSchedule::new(family, delta, arms, alphabet).unwrap()
    }

    fn arm_with(counts: &[u64]) -> ArmState {
        let mut arm = ArmState::new(0, counts.len());
        for (j, &c) in counts.iter().enumerate() {
            for _ in 0..c {
                arm.record(j);
            }
        }
        arm
    }

    #[test]
    fn delta_t_decreasing_and_budgeted() {
        for family in [
            BoundFamily::RelChernoff,
            BoundFamily::EmpBernstein,
            BoundFamily::Hoeffding,
        ] {
            let s = sched(family, 0.3, 3, 4);
            let mut partial = 0.0;
            let mut prev = f64::INFINITY;
            for t in 1..=10_000u64 {
                let dt = s.delta_t(t);
                assert!(dt > 0.0 && dt < prev);
                prev = dt;
                partial += dt * (s.arms * s.alphabet) as f64;
                assert!(
                    partial <= s.delta * (1.0 + 1e-12),
                    "union budget exceeded at t = {t}"
                );
            }
            // The full series sums to delta * numerator / 6.
            let full = s.family.numerator() * s.delta / 6.0;
            assert!(partial < full && partial > 0.99 * full);
        }
    }

    #[test]
    fn hoeffding_radius_hand_value() {
        // delta_t = 6 * 0.06 / (1 * 2 * pi^2) and eight pulls.
        let s = sched(BoundFamily::Hoeffding, 0.06, 1, 2);
        let dt = s.delta_t(1);
        assert!((dt - 0.36 / (2.0 * std::f64::consts::PI.powi(2))).abs() < 1e-15);
        let r = radius_hoeffding(&s, 1, 8).unwrap();
        let want = (2.0 * (2.0 / dt).ln() / 8.0).sqrt();
        assert!((r - want).abs() < 1e-15);
        assert!((r - 1.0837).abs() < 1e-4);
    }

    #[test]
    fn radius_scaling_and_positivity() {
        let s = sched(BoundFamily::Hoeffding, 0.1, 2, 2);
        let r1 = radius_hoeffding(&s, 5, 10).unwrap();
        let r4 = radius_hoeffding(&s, 5, 40).unwrap();
        assert!((r1 / r4 - 2.0).abs() < 1e-12);
        assert!(r1 > 0.0);
        assert_eq!(radius_hoeffding(&s, 5, 0).unwrap_err(), Error::ZeroPulls);
        // Strictly decreasing in pulls at fixed t.
        let mut prev = f64::INFINITY;
        for pulls in 1..50 {
            let r = radius_hoeffding(&s, 7, pulls).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn l1_radius_is_l_per_symbol_radii() {
        let s = sched(BoundFamily::EmpBernstein, 0.2, 2, 2);
        let per_symbol = radius_hoeffding(&s, 3, 9).unwrap();
        let total = radius_l1(&s, 3, 9).unwrap();
        assert!((total - 2.0 * per_symbol).abs() < 1e-12);
    }

    #[test]
    fn upper_l2_basics() {
        let s = sched(BoundFamily::RelChernoff, 0.1, 2, 2);
        let empty = ArmState::new(0, 2);
        assert!(upper_l2(&s, &empty, 1).upper.is_infinite());

        let arm = arm_with(&[5, 5]);
        let b = upper_l2(&s, &arm, 4);
        assert_eq!(b.c_hat, Some(0.5));
        let u = b.upper.finite().unwrap();
        assert!((u - 0.5 - radius_l2(&s, 4, 10).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn upper_l1_degenerate_empirical() {
        let s = sched(BoundFamily::EmpBernstein, 0.1, 2, 2);
        let arm = arm_with(&[5, 0]);
        let b = upper_l1(&s, &arm, 6);
        assert_eq!(b.c_hat, Some(0.0));
        assert!(b.upper.finite().unwrap() > 0.0);
    }

    #[test]
    fn upper_kl_gate() {
        let s = sched(BoundFamily::Hoeffding, 0.1, 2, 2);
        // A symbol with zero empirical mass can never clear the gate.
        let arm = arm_with(&[9, 0]);
        assert!(upper_kl(&s, &arm, 5, 0.1).unwrap().upper.is_infinite());

        // With enormous pull counts the radius vanishes and the bound
        // approaches the plug-in KL parameter.
        let mut big = ArmState::new(0, 2);
        for _ in 0..500_000 {
            big.record(0);
            big.record(1);
        }
        let b = upper_kl(&s, &big, 10, 0.1).unwrap();
        let u = b.upper.finite().expect("gate passes at this scale");
        assert!((u - 0.25).abs() < 1e-2, "u = {u}");
        assert!(u >= b.c_hat.unwrap());
    }

    #[test]
    fn upper_sep_limit() {
        let s = sched(BoundFamily::Hoeffding, 0.1, 2, 2);
        let mut big = ArmState::new(0, 2);
        for _ in 0..500_000 {
            big.record(0);
            big.record(1);
        }
        let b = upper_sep(&s, &big, 10, 0.1).unwrap();
        let u = b.upper.finite().unwrap();
        let want = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!(u >= want && (u - want).abs() < 2e-2, "u = {u}, want {want}");

        let gated = arm_with(&[3, 0]);
        assert!(upper_sep(&s, &gated, 4, 0.1).unwrap().upper.is_infinite());
    }

    #[test]
    fn sep_diagnostics_readings() {
        let s = sched(BoundFamily::Hoeffding, 0.1, 2, 2);
        let d = sep_diagnostics(&s, 4, 16, 0.2).unwrap();
        let want_a = (32.0 * (2.0 / s.delta_t(4)).ln() / 16.0).powf(0.25);
        assert!((d.a - want_a).abs() < 1e-12);
        assert!(d.b_min_reading <= d.b_max_reading);
    }

    #[test]
    fn invalid_eta_rejected() {
        let s = sched(BoundFamily::Hoeffding, 0.1, 2, 2);
        let arm = arm_with(&[4, 4]);
        assert!(upper_kl(&s, &arm, 3, 0.0).is_err());
        assert!(upper_sep(&s, &arm, 3, 0.7).is_err());
    }
}
