//! Discrete distributions on a finite alphabet, sampling, empirical
//! estimation, and the distance measures between them.
//!
//! Symbols are indexed `0..l`. Distances are always evaluated as
//! `D(estimate, truth)`: the second argument plays the role of the true
//! distribution and is the one that appears in denominators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the input mass sum accepted by the constructor.
/// Masses within this tolerance are renormalized to sum to one exactly.
pub const MASS_SUM_TOLERANCE: f64 = 1e-6;

/// A point of the probability simplex over `l >= 2` symbols.
///
/// Construction rejects negative masses and mass sums away from one, then
/// normalizes, so downstream code may assume simplex membership.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(masses: &[f64]) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::InvalidMasses(format!(
                "alphabet size must be at least 2, got {}",
                masses.len()
            )));
        }
        for (j, &m) in masses.iter().enumerate() {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidMasses(format!(
                    "mass {m} at symbol {j} is negative or not finite"
                )));
            }
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > MASS_SUM_TOLERANCE {
            return Err(Error::InvalidMasses(format!(
                "masses sum to {sum}, expected 1 within {MASS_SUM_TOLERANCE:e}"
            )));
        }
        Ok(Self {
            probs: masses.iter().map(|m| m / sum).collect(),
        })
    }

    /// The uniform distribution over `l` symbols.
    pub fn uniform(l: usize) -> Self {
        assert!(l >= 2, "alphabet size must be at least 2");
        Self {
            probs: vec![1.0 / l as f64; l],
        }
    }

    /// A two-symbol distribution with mass `p` on symbol 0.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(&[p, 1.0 - p])
    }

    #[allow(clippy::len_without_is_empty)] // at least two symbols by construction
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> f64 {
        self.probs[j]
    }

    /// True when every mass is strictly positive.
    pub fn strictly_positive(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    /// The largest `eta` such that this distribution is `eta`-interior,
    /// i.e. `min_j min(p_j, 1 - p_j)`.
    pub fn interior_margin(&self) -> f64 {
        self.probs
            .iter()
            .map(|&p| p.min(1.0 - p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Draw one symbol index with probability `p_j`, advancing `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (j, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return j;
            }
        }
        // Rounding can leave acc a hair below 1; the draw belongs to the
        // last symbol with positive mass.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("a distribution has at least one positive mass")
    }
}

/// The eta-interior restriction of the simplex: every mass in [eta, 1-eta].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaInterior {
    eta: f64,
}

impl EtaInterior {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in (0, 1/2), got {eta}"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn contains(&self, dist: &DiscreteDistribution) -> bool {
        // An ulp of slack so that e.g. Ber(0.8) passes the 0.2-interior
        // check despite 1 - 0.2 rounding below 0.8.
        dist.probs()
            .iter()
            .all(|&p| p + 1e-12 >= self.eta && p - 1e-12 <= 1.0 - self.eta)
    }
}

/// Pull counter and per-symbol counts for one arm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmState {
    pub arm_id: usize,
    pulls: u64,
    counts: Vec<u64>,
}

impl ArmState {
    pub fn new(arm_id: usize, l: usize) -> Self {
        Self {
            arm_id,
            pulls: 0,
            counts: vec![0; l],
        }
    }

    pub fn pulls(&self) -> u64 {
        self.pulls
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, symbol: usize) {
        self.counts[symbol] += 1;
        self.pulls += 1;
    }

    /// Empirical mass of symbol `j`; only defined after the first pull.
    pub fn empirical_mass(&self, j: usize) -> Result<f64> {
        if self.pulls == 0 {
            return Err(Error::ZeroPulls);
        }
        Ok(self.counts[j] as f64 / self.pulls as f64)
    }

    /// The empirical distribution `counts / pulls`. Empirical estimates may
    /// sit on the boundary of the simplex.
    pub fn empirical(&self) -> Result<DiscreteDistribution> {
        if self.pulls == 0 {
            return Err(Error::ZeroPulls);
        }
        let t = self.pulls as f64;
        Ok(DiscreteDistribution {
            probs: self.counts.iter().map(|&c| c as f64 / t).collect(),
        })
    }
}

/// Coefficients `f^(m)(1) / m!` of an f-divergence generator, for m = 1..r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FDerivativeTable {
    pub coefficients: Vec<f64>,
}

/// The distance measures between a distribution estimate and the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DistanceKind {
    /// Squared l2: sum of squared mass differences.
    L2Sq,
    /// l1: sum of absolute mass differences.
    L1,
    /// Total variation, exactly half of `L1`.
    Tv,
    /// Kullback-Leibler divergence `sum p-hat log(p-hat / p)`, with the
    /// convention `0 log 0 = 0`.
    Kl,
    /// Chi-squared divergence `sum (p-hat - p)^2 / p`.
    Chi2,
    /// Hellinger distance `sqrt(sum (sqrt(p-hat) - sqrt(p))^2)`, the square
    /// root of the f-divergence with generator `2(1 - sqrt(x))`.
    Hellinger,
    /// Separation distance `max_j (1 - p-hat_j / p_j)`. The per-symbol terms
    /// are not clipped; the max itself is nonnegative on the simplex.
    Separation,
    /// Truncated f-divergence defined by a derivative table:
    /// `sum_m coeff_m sum_j (p-hat_j - p_j)^m / p_j^(m-1)`.
    GenericF(FDerivativeTable),
}

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::L2Sq => "l2",
            DistanceKind::L1 => "l1",
            DistanceKind::Tv => "tv",
            DistanceKind::Kl => "kl",
            DistanceKind::Chi2 => "chi2",
            DistanceKind::Hellinger => "hellinger",
            DistanceKind::Separation => "sep",
            DistanceKind::GenericF(_) => "generic_f",
        }
    }
}

/// Evaluate `D(estimate, truth)` for the given distance kind.
///
/// The truth must be strictly positive wherever a term divides by it; a
/// zero mass that is never divided by is allowed.
pub fn distance(
    kind: &DistanceKind,
    estimate: &DiscreteDistribution,
    truth: &DiscreteDistribution,
) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch(estimate.len(), truth.len()));
    }
    let ps = estimate.probs();
    let qs = truth.probs();
    match kind {
        DistanceKind::L2Sq => Ok(ps
            .iter()
            .zip(qs)
            .map(|(&p, &q)| (p - q) * (p - q))
            .sum()),
        DistanceKind::L1 => Ok(ps.iter().zip(qs).map(|(&p, &q)| (p - q).abs()).sum()),
        DistanceKind::Tv => {
            let l1 = distance(&DistanceKind::L1, estimate, truth)?;
            Ok(l1 / 2.0)
        }
        DistanceKind::Kl => {
            let mut acc = 0.0;
            for (j, (&p, &q)) in ps.iter().zip(qs).enumerate() {
                if p == 0.0 {
                    continue; // 0 log 0 = 0
                }
                if q == 0.0 {
                    return Err(Error::DivisionByZeroMass(j));
                }
                acc += p * (p / q).ln();
            }
            Ok(acc)
        }
        DistanceKind::Chi2 => {
            let mut acc = 0.0;
            for (j, (&p, &q)) in ps.iter().zip(qs).enumerate() {
                if q == 0.0 {
                    if p == 0.0 {
                        continue;
                    }
                    return Err(Error::DivisionByZeroMass(j));
                }
                acc += (p - q) * (p - q) / q;
            }
            Ok(acc)
        }
        DistanceKind::Hellinger => {
            let sq: f64 = ps
                .iter()
                .zip(qs)
                .map(|(&p, &q)| {
                    let d = p.sqrt() - q.sqrt();
                    d * d
                })
                .sum();
            Ok(sq.sqrt())
        }
        DistanceKind::Separation => {
            let mut best = f64::NEG_INFINITY;
            for (j, (&p, &q)) in ps.iter().zip(qs).enumerate() {
                if q == 0.0 {
                    if p == 0.0 {
                        continue;
                    }
                    return Err(Error::DivisionByZeroMass(j));
                }
                best = best.max(1.0 - p / q);
            }
            Ok(best)
        }
        DistanceKind::GenericF(table) => {
            let mut acc = 0.0;
            for (m, &coeff) in table.coefficients.iter().enumerate() {
                let power = m + 1;
                let mut inner = 0.0;
                for (j, (&p, &q)) in ps.iter().zip(qs).enumerate() {
                    let diff = p - q;
                    if power > 1 && q == 0.0 {
                        if diff == 0.0 {
                            continue;
                        }
                        return Err(Error::DivisionByZeroMass(j));
                    }
                    inner += diff.powi(power as i32) / q.powi(power as i32 - 1);
                }
                acc += coeff * inner;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn ber(p: f64) -> DiscreteDistribution {
        DiscreteDistribution::bernoulli(p).unwrap()
    }

    #[test]
    fn construction_rejects_bad_masses() {
        assert!(DiscreteDistribution::new(&[0.5, 0.7]).is_err());
        assert!(DiscreteDistribution::new(&[-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(&[1.0]).is_err());
        assert!(DiscreteDistribution::new(&[0.5, 0.5]).is_ok());
    }

    #[test]
    fn construction_normalizes() {
        let d = DiscreteDistribution::new(&[0.3333333, 0.3333333, 0.3333334]).unwrap();
        let sum: f64 = d.probs().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn point_mass_always_samples_first_symbol() {
        let d = DiscreteDistribution::new(&[1.0, 0.0, 0.0]).unwrap();
        let mut rng = RngStream::new(11).rng();
        for _ in 0..1000 {
            assert_eq!(d.sample(&mut rng), 0);
        }
    }

    #[test]
    fn bernoulli_frequency_within_three_sigma() {
        // 1e6 draws from Ber(0.5); the 3-sigma band around 0.5 is +-0.0015.
        let d = ber(0.5);
        let mut rng = RngStream::new(2024).rng();
        let hits = (0..1_000_000).filter(|_| d.sample(&mut rng) == 0).count();
        let freq = hits as f64 / 1e6;
        assert!((0.498..=0.502).contains(&freq), "freq = {freq}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let d = DiscreteDistribution::new(&[0.2, 0.3, 0.5]).unwrap();
        let stream = RngStream::new(5).substream(1);
        let draw = |s: &RngStream| -> Vec<usize> {
            let mut rng = s.rng();
            (0..256).map(|_| d.sample(&mut rng)).collect()
        };
        assert_eq!(draw(&stream), draw(&stream));
    }

    #[test]
    fn empirical_ratios() {
        let mut arm = ArmState::new(0, 2);
        for _ in 0..3 {
            arm.record(0);
        }
        arm.record(1);
        assert_eq!(arm.empirical().unwrap().probs(), &[0.75, 0.25]);

        let mut boundary = ArmState::new(0, 2);
        for _ in 0..5 {
            boundary.record(1);
        }
        assert_eq!(boundary.empirical().unwrap().probs(), &[0.0, 1.0]);

        let mut even = ArmState::new(0, 3);
        for j in 0..3 {
            even.record(j);
            even.record(j);
        }
        for &p in even.empirical().unwrap().probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empirical_requires_pulls() {
        let arm = ArmState::new(0, 2);
        assert_eq!(arm.empirical().unwrap_err(), Error::ZeroPulls);
    }

    #[test]
    fn distance_values() {
        let e = ber(0.6);
        let t = ber(0.5);
        assert!((distance(&DistanceKind::L2Sq, &e, &t).unwrap() - 0.02).abs() < 1e-15);
        let kl = distance(&DistanceKind::Kl, &e, &t).unwrap();
        let expected = 0.6 * (1.2f64).ln() + 0.4 * (0.8f64).ln();
        assert!((kl - expected).abs() < 1e-15);
        assert!((kl - 0.020136).abs() < 1e-6);

        let sep = distance(&DistanceKind::Separation, &ber(0.25), &t).unwrap();
        assert!((sep - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tv_is_half_l1() {
        let pairs = [
            (ber(0.1), ber(0.9)),
            (ber(0.4), ber(0.45)),
            (
                DiscreteDistribution::new(&[0.2, 0.3, 0.5]).unwrap(),
                DiscreteDistribution::new(&[0.5, 0.25, 0.25]).unwrap(),
            ),
        ];
        for (e, t) in &pairs {
            let l1 = distance(&DistanceKind::L1, e, t).unwrap();
            let tv = distance(&DistanceKind::Tv, e, t).unwrap();
            assert_eq!(tv, l1 / 2.0);
        }
    }

    #[test]
    fn kl_zero_estimate_mass_is_fine() {
        let e = DiscreteDistribution::new(&[0.0, 1.0]).unwrap();
        let t = ber(0.5);
        let kl = distance(&DistanceKind::Kl, &e, &t).unwrap();
        assert!((kl - (2.0f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_truth_mass_errors_when_divided() {
        let e = ber(0.5);
        let t = DiscreteDistribution::new(&[1.0, 0.0]).unwrap();
        assert_eq!(
            distance(&DistanceKind::Kl, &e, &t).unwrap_err(),
            Error::DivisionByZeroMass(1)
        );
        assert_eq!(
            distance(&DistanceKind::Chi2, &e, &t).unwrap_err(),
            Error::DivisionByZeroMass(1)
        );
    }

    #[test]
    fn dimension_mismatch() {
        let e = ber(0.5);
        let t = DiscreteDistribution::uniform(3);
        assert_eq!(
            distance(&DistanceKind::L1, &e, &t).unwrap_err(),
            Error::DimensionMismatch(2, 3)
        );
    }

    #[test]
    fn eta_interior_check() {
        let eta = EtaInterior::new(0.2).unwrap();
        assert!(eta.contains(&ber(0.5)));
        assert!(eta.contains(&ber(0.8)));
        assert!(!eta.contains(&ber(0.81)));
        assert!(EtaInterior::new(0.5).is_err());
        assert!(EtaInterior::new(0.0).is_err());
    }

    #[test]
    fn separation_is_not_clipped_below() {
        // Estimate piles mass on symbol 0, so the symbol-0 term is negative;
        // the max is still attained at a nonnegative term.
        let e = ber(0.9);
        let t = ber(0.5);
        let sep = distance(&DistanceKind::Separation, &e, &t).unwrap();
        assert!((sep - 0.8).abs() < 1e-15); // 1 - 0.1/0.5
    }
}
