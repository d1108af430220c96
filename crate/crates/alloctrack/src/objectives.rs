//! Regular objective functions `phi(c, T)`, the per-distance parameter
//! extractors `c_i(P_i)`, and the truncated-Taylor machinery for
//! f-divergences.
//!
//! An objective maps a distribution-dependent parameter `c` and a (real)
//! sample count `T` to the expected distance it tracks, and is regular:
//! concave nondecreasing in `c`, convex nonincreasing in `T`,
//! differentiable in both. `T` is treated as a real so that oracle solvers
//! can equalize exactly before rounding.

use serde::{Deserialize, Serialize};

use crate::distributions::{DiscreteDistribution, DistanceKind};
use crate::error::{Error, Result};

/// Largest alphabet for which subset enumeration (2^l - 2 proper subsets)
/// is attempted.
pub const SUBSET_ENUMERATION_CAP: usize = 20;

/// Functional form of a regular objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveForm {
    /// `phi(c, T) = c / T^alpha`.
    PowerLaw { alpha: f64 },
    /// `phi(c, T) = c * sqrt(1 / (2 pi T))`.
    Separation,
    /// `phi(c, T) = (l - 1) / (2 T) + c / T^2`.
    Kl { l: usize },
    /// `phi(c, T) = (l - 1) / (2 T)`; the parameter `c` is unused.
    Chi2 { l: usize },
}

/// A regular objective together with its analytic partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub form: ObjectiveForm,
}

impl ObjectiveSpec {
    pub fn power_law(alpha: f64) -> Self {
        Self {
            form: ObjectiveForm::PowerLaw { alpha },
        }
    }

    /// The objective tracked for a distance kind, or `None` when the
    /// distance has no allocation scheme (Hellinger, generic f).
    pub fn for_distance(kind: &DistanceKind, l: usize) -> Option<Self> {
        let form = match kind {
            DistanceKind::L2Sq => ObjectiveForm::PowerLaw { alpha: 1.0 },
            DistanceKind::L1 | DistanceKind::Tv => ObjectiveForm::PowerLaw { alpha: 0.5 },
            DistanceKind::Separation => ObjectiveForm::Separation,
            DistanceKind::Kl => ObjectiveForm::Kl { l },
            DistanceKind::Chi2 => ObjectiveForm::Chi2 { l },
            DistanceKind::Hellinger | DistanceKind::GenericF(_) => return None,
        };
        Some(Self { form })
    }

    /// Exponent when the objective has the pure form `c / T^alpha`.
    pub fn alpha(&self) -> Option<f64> {
        match self.form {
            ObjectiveForm::PowerLaw { alpha } => Some(alpha),
            ObjectiveForm::Separation => Some(0.5),
            _ => None,
        }
    }

    /// Objective value at `(c, T)`, `T > 0`.
    pub fn eval(&self, c: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::NonpositiveBudget(t));
        }
        Ok(match self.form {
            ObjectiveForm::PowerLaw { alpha } => c / t.powf(alpha),
            ObjectiveForm::Separation => c * (1.0 / (2.0 * std::f64::consts::PI * t)).sqrt(),
            ObjectiveForm::Kl { l } => (l as f64 - 1.0) / (2.0 * t) + c / (t * t),
            ObjectiveForm::Chi2 { l } => (l as f64 - 1.0) / (2.0 * t),
        })
    }

    /// Partial derivative in `c` at fixed `T`.
    pub fn dc(&self, _c: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::NonpositiveBudget(t));
        }
        Ok(match self.form {
            ObjectiveForm::PowerLaw { alpha } => t.powf(-alpha),
            ObjectiveForm::Separation => (1.0 / (2.0 * std::f64::consts::PI * t)).sqrt(),
            ObjectiveForm::Kl { .. } => 1.0 / (t * t),
            ObjectiveForm::Chi2 { .. } => 0.0,
        })
    }

    /// Partial derivative in `T` at fixed `c`.
    pub fn dt(&self, c: f64, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(Error::NonpositiveBudget(t));
        }
        Ok(match self.form {
            ObjectiveForm::PowerLaw { alpha } => -alpha * c * t.powf(-alpha - 1.0),
            ObjectiveForm::Separation => {
                -0.5 * c * (1.0 / (2.0 * std::f64::consts::PI)).sqrt() * t.powf(-1.5)
            }
            ObjectiveForm::Kl { l } => -(l as f64 - 1.0) / (2.0 * t * t) - 2.0 * c / (t * t * t),
            ObjectiveForm::Chi2 { l } => -(l as f64 - 1.0) / (2.0 * t * t),
        })
    }

    /// Numerical audit of the regularity conditions on log grids:
    /// nonincreasing convex in `T` on `[1, 1e7]`, nondecreasing concave in
    /// `c` on `c_range`, and analytic derivatives matching central finite
    /// differences.
    pub fn audit_regularity(&self, c_probe: f64, c_range: (f64, f64)) -> Result<()> {
        let slack = 1e-6;
        let t_grid = log_grid(1.0, 1e7, 120);
        // Monotone and convex in T.
        for w in t_grid.windows(3) {
            let (t0, t1, t2) = (w[0], w[1], w[2]);
            let (f0, f1, f2) = (
                self.eval(c_probe, t0)?,
                self.eval(c_probe, t1)?,
                self.eval(c_probe, t2)?,
            );
            let scale = f0.abs().max(f2.abs()).max(1e-300);
            if f1 > f0 + slack * scale || f2 > f1 + slack * scale {
                return Err(Error::NonconvexObjective(format!(
                    "not nonincreasing in T near T = {t1}"
                )));
            }
            let chord = f0 + (f2 - f0) * (t1 - t0) / (t2 - t0);
            if f1 > chord + slack * scale {
                return Err(Error::NonconvexObjective(format!(
                    "not convex in T near T = {t1}"
                )));
            }
        }
        // Monotone and concave in c at a few budgets.
        let c_grid = log_grid(c_range.0, c_range.1, 40);
        for &t in &[1.0, 32.0, 1e3, 1e7] {
            for w in c_grid.windows(3) {
                let (f0, f1, f2) = (
                    self.eval(w[0], t)?,
                    self.eval(w[1], t)?,
                    self.eval(w[2], t)?,
                );
                let scale = f0.abs().max(f2.abs()).max(1e-300);
                if f1 + slack * scale < f0 || f2 + slack * scale < f1 {
                    return Err(Error::NonconvexObjective(format!(
                        "not nondecreasing in c near c = {}",
                        w[1]
                    )));
                }
                let chord = f0 + (f2 - f0) * (w[1] - w[0]) / (w[2] - w[0]);
                if f1 + slack * scale < chord {
                    return Err(Error::NonconvexObjective(format!(
                        "not concave in c near c = {}",
                        w[1]
                    )));
                }
            }
        }
        // Derivatives against central differences on a deterministic grid.
        for &t in &[1.5, 10.0, 1234.5, 9.9e6] {
            for &c in &[c_probe, c_range.0, c_range.1] {
                let ht = t * 1e-5;
                let num_dt = (self.eval(c, t + ht)? - self.eval(c, t - ht)?) / (2.0 * ht);
                let ana_dt = self.dt(c, t)?;
                let scale = ana_dt.abs().max(1e-12);
                if (num_dt - ana_dt).abs() > 1e-6 * scale {
                    return Err(Error::NonconvexObjective(format!(
                        "dT mismatch at (c={c}, T={t}): analytic {ana_dt}, numeric {num_dt}"
                    )));
                }
                // Every shipped form is linear in c, so a wide central
                // difference stays exact while dodging cancellation at
                // large T.
                let hc = c.abs().max(1.0) * 0.5;
                let num_dc = (self.eval(c + hc, t)? - self.eval(c - hc, t)?) / (2.0 * hc);
                let ana_dc = self.dc(c, t)?;
                let scale = ana_dc.abs().max(1e-12);
                if (num_dc - ana_dc).abs() > 1e-6 * scale {
                    return Err(Error::NonconvexObjective(format!(
                        "dC mismatch at (c={c}, T={t}): analytic {ana_dc}, numeric {num_dc}"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (lo.max(1e-300), hi);
    (0..points)
        .map(|i| {
            let frac = i as f64 / (points - 1) as f64;
            (lo.ln() + frac * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

/// `c` for squared l2: `sum_j p_j (1 - p_j)`.
pub fn c_l2(p: &DiscreteDistribution) -> f64 {
    p.probs().iter().map(|&x| x * (1.0 - x)).sum()
}

/// `c` for l1: `sum_j sqrt(p_j (1 - p_j))`.
pub fn c_l1(p: &DiscreteDistribution) -> f64 {
    p.probs().iter().map(|&x| (x * (1.0 - x)).sqrt()).sum()
}

/// `c` for KL: `(sum_j 1/p_j - 1) / 12`. Requires strictly positive masses.
pub fn c_kl(p: &DiscreteDistribution) -> Result<f64> {
    let mut inv_sum = 0.0;
    for (j, &x) in p.probs().iter().enumerate() {
        if x == 0.0 {
            return Err(Error::DivisionByZeroMass(j));
        }
        inv_sum += 1.0 / x;
    }
    Ok((inv_sum - 1.0) / 12.0)
}

/// `rho1(p) = sqrt((1 - p) / p)`.
pub fn rho1(p: f64) -> f64 {
    ((1.0 - p) / p).sqrt()
}

/// `rho2(p) = rho1(p) + rho1(1 - p)`.
pub fn rho2(p: f64) -> f64 {
    rho1(p) + rho1(1.0 - p)
}

/// `c` for separation distance: `sum_j rho1(p_j)`.
pub fn c_sep(p: &DiscreteDistribution) -> Result<f64> {
    let mut acc = 0.0;
    for (j, &x) in p.probs().iter().enumerate() {
        if x == 0.0 {
            return Err(Error::DivisionByZeroMass(j));
        }
        acc += rho1(x);
    }
    Ok(acc)
}

/// Lower sandwich constant for separation: `max_S rho2(p_S)` over nonempty
/// proper subsets `S` of the alphabet, together with the maximizing subset
/// mass `p_S*`. Enumerates `2^l - 2` subsets, capped at `l <= 20`.
pub fn c_tilde_sep(p: &DiscreteDistribution) -> Result<(f64, f64)> {
    let l = p.len();
    if l > SUBSET_ENUMERATION_CAP {
        return Err(Error::AlphabetTooLarge(l, SUBSET_ENUMERATION_CAP));
    }
    for (j, &x) in p.probs().iter().enumerate() {
        if x == 0.0 {
            return Err(Error::DivisionByZeroMass(j));
        }
    }
    // rho2(p_S) = rho2(1 - p_S), so it suffices to enumerate the subsets
    // containing symbol 0; this also keeps the l = 2 case bit-identical to
    // c_sep.
    let mut best = f64::NEG_INFINITY;
    let mut best_mass = f64::NAN;
    let full = (1u32 << l) - 1;
    for mask in (1u32..full).filter(|m| m & 1 != 0) {
        let mut mass = 0.0;
        for (j, &x) in p.probs().iter().enumerate() {
            if mask & (1 << j) != 0 {
                mass += x;
            }
        }
        let value = rho2(mass);
        if value > best {
            best = value;
            best_mass = mass;
        }
    }
    Ok((best, best_mass))
}

fn sandwich_summand(p: f64) -> f64 {
    (1.0 - p) * (1.0 + 2.0 * p * p - 2.0 * p)
        + (2.0 * (1.0 - p) * ((1.0 - p).powi(3) + p.powi(3)) / std::f64::consts::PI).sqrt()
}

/// The O(1/T) constants of the separation-distance sandwich: the upper one
/// sums the summand over all symbol masses, the lower one over
/// `{p_S*, 1 - p_S*}` for the subset maximizing `rho2`.
pub fn sep_sandwich_constants(p: &DiscreteDistribution) -> Result<(f64, f64)> {
    let upper = p.probs().iter().map(|&x| sandwich_summand(x)).sum();
    let (_, best_mass) = c_tilde_sep(p)?;
    let lower = sandwich_summand(best_mass) + sandwich_summand(1.0 - best_mass);
    Ok((upper, lower))
}

/// Per-arm distance parameters: the tracked `c`, and for separation the
/// lower sandwich constant and the O(1/T) constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceParams {
    pub c: f64,
    pub c_tilde: Option<f64>,
    pub c_upper: Option<f64>,
    pub c_tilde_upper: Option<f64>,
}

impl DistanceParams {
    pub fn for_distance(kind: &DistanceKind, p: &DiscreteDistribution) -> Result<Self> {
        let mut params = Self {
            c: 0.0,
            c_tilde: None,
            c_upper: None,
            c_tilde_upper: None,
        };
        match kind {
            DistanceKind::L2Sq => params.c = c_l2(p),
            DistanceKind::L1 => params.c = c_l1(p),
            DistanceKind::Tv => params.c = c_l1(p) / 2.0,
            DistanceKind::Kl => params.c = c_kl(p)?,
            DistanceKind::Chi2 => params.c = 0.0,
            DistanceKind::Separation => {
                params.c = c_sep(p)?;
                let (ct, _) = c_tilde_sep(p)?;
                let (cu, ctu) = sep_sandwich_constants(p)?;
                params.c_tilde = Some(ct);
                params.c_upper = Some(cu);
                params.c_tilde_upper = Some(ctu);
            }
            DistanceKind::Hellinger | DistanceKind::GenericF(_) => {
                return Err(Error::UnsupportedDistance(kind.name().to_string()))
            }
        }
        Ok(params)
    }
}

/// Closed-form expected distance after `T` i.i.d. samples, available for
/// squared l2 and chi-squared.
pub fn exact_expected_distance(kind: &DistanceKind, p: &DiscreteDistribution, t: f64) -> Result<f64> {
    if t < 1.0 {
        return Err(Error::NonpositiveBudget(t));
    }
    match kind {
        DistanceKind::L2Sq => Ok(c_l2(p) / t),
        DistanceKind::Chi2 => Ok((p.len() as f64 - 1.0) / t),
        _ => Err(Error::UnsupportedDistance(kind.name().to_string())),
    }
}

/// Truncated Taylor expansion of an f-divergence around the true masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorSpec {
    /// Truncation order `r >= 1`.
    pub r: usize,
    /// `f^(m)(1) / m!` for `m = 1..=r`.
    pub fm_over_mfact: Vec<f64>,
    /// Uniform bound on the coefficient magnitudes.
    pub c1: f64,
    /// Remainder constant, when calibrated.
    pub cf_r1: Option<f64>,
}

impl TaylorSpec {
    pub fn new(fm_over_mfact: Vec<f64>, c1: f64) -> Result<Self> {
        if fm_over_mfact.is_empty() {
            return Err(Error::InvalidParameter(
                "a Taylor table needs at least the first-order coefficient".into(),
            ));
        }
        if fm_over_mfact.iter().any(|a| a.abs() > c1 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "a coefficient exceeds the stated uniform bound C1 = {c1}"
            )));
        }
        Ok(Self {
            r: fm_over_mfact.len(),
            fm_over_mfact,
            c1,
            cf_r1: None,
        })
    }

    /// KL generator `f(x) = x log x`: coefficients `1, 1/2, -1/6, 1/12, ...`
    /// i.e. `(-1)^m / (m (m - 1))` for `m >= 2`.
    pub fn kl(r: usize) -> Self {
        let coeffs: Vec<f64> = (1..=r)
            .map(|m| {
                if m == 1 {
                    1.0
                } else {
                    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                    sign / (m as f64 * (m as f64 - 1.0))
                }
            })
            .collect();
        Self::new(coeffs, 1.0).expect("KL table is valid")
    }

    /// Chi-squared generator `f(x) = (x - 1)^2`: only the quadratic term.
    pub fn chi2(r: usize) -> Self {
        let coeffs: Vec<f64> = (1..=r).map(|m| if m == 2 { 1.0 } else { 0.0 }).collect();
        Self::new(coeffs, 1.0).expect("chi2 table is valid")
    }

    /// Hellinger generator `f(x) = 2 (1 - sqrt(x))`:
    /// coefficients `-2 * binom(1/2, m)`.
    pub fn hellinger(r: usize) -> Self {
        let mut coeffs = Vec::with_capacity(r);
        let mut binom = 1.0; // binom(1/2, 0)
        for m in 1..=r {
            binom *= (0.5 - (m as f64 - 1.0)) / m as f64;
            coeffs.push(-2.0 * binom);
        }
        Self::new(coeffs, 1.0).expect("Hellinger table is valid")
    }

    pub fn with_remainder_constant(mut self, cf_r1: f64) -> Self {
        self.cf_r1 = Some(cf_r1);
        self
    }
}

/// The r-term Taylor approximation
/// `sum_{m=1}^r (f^(m)(1)/m!) sum_j (p-hat_j - p_j)^m / p_j^(m-1)`.
pub fn taylor_f_div(
    spec: &TaylorSpec,
    estimate: &DiscreteDistribution,
    truth: &DiscreteDistribution,
) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch(estimate.len(), truth.len()));
    }
    for (j, &q) in truth.probs().iter().enumerate() {
        if q == 0.0 {
            return Err(Error::DivisionByZeroMass(j));
        }
    }
    let mut acc = 0.0;
    for (m_idx, &coeff) in spec.fm_over_mfact.iter().enumerate() {
        let m = (m_idx + 1) as i32;
        let inner: f64 = estimate
            .probs()
            .iter()
            .zip(truth.probs())
            .map(|(&p, &q)| (p - q).powi(m) / q.powi(m - 1))
            .sum();
        acc += coeff * inner;
    }
    Ok(acc)
}

/// Remainder bound `C_(f,r+1) * (p T)^(-(r+1)/2)` for one symbol of mass `p`.
pub fn remainder_bound(spec: &TaylorSpec, p: f64, t: f64) -> Result<f64> {
    let cf = spec.cf_r1.ok_or(Error::MissingConstant)?;
    if p <= 0.0 {
        return Err(Error::DivisionByZeroMass(0));
    }
    if t < 1.0 {
        return Err(Error::NonpositiveBudget(t));
    }
    Ok(cf * (p * t).powf(-((spec.r as f64 + 1.0) / 2.0)))
}

/// Calibration worksheet for the KL remainder constant at symbol mass `p`.
///
/// Splits the remainder by whether the empirical ratio deviates from one by
/// more than `eps`, bounds the far region by a grid supremum of the exact
/// Lagrange remainder and the near region by the coefficient bound, then
/// multiplies by the subgaussian moment factor and minimizes over
/// `eps in {0.05, 0.10, ..., 0.95}`.
pub fn kl_remainder_constant(r: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "symbol mass must lie in (0, 1), got {p}"
        )));
    }
    let spec = TaylorSpec::kl(r);
    // Exact remainder of the r-term expansion at empirical mass q:
    // p * (f(q/p) - sum_{m<=r} a_m ((q-p)/p)^m) with f(x) = x log x, f(0) = 0.
    let exact_remainder = |q: f64| -> f64 {
        let x = q / p;
        let fx = if x == 0.0 { 0.0 } else { x * x.ln() };
        let u = (q - p) / p;
        let mut taylor = 0.0;
        for (m_idx, &a) in spec.fm_over_mfact.iter().enumerate() {
            taylor += a * u.powi(m_idx as i32 + 1);
        }
        p * (fx - taylor)
    };
    let moment_factor = (3.0 * (2.0f64 / std::f64::consts::E).exp() * (r as f64 + 1.0) / 2.0)
        .powf((r as f64 + 1.0) / 2.0);
    let mut best = f64::INFINITY;
    for step in 1..=19 {
        let eps = step as f64 * 0.05;
        // sup of |remainder| / eps^(r+1) over the far region |q-p|/p >= eps.
        let mut gamma = 0.0f64;
        let grid = 2000;
        for i in 0..=grid {
            let q = i as f64 / grid as f64;
            if ((q - p) / p).abs() >= eps {
                gamma = gamma.max(exact_remainder(q).abs());
            }
        }
        let c_eps = gamma / eps.powi(r as i32 + 1);
        let bracket = spec.c1 * p / (1.0 - eps) + c_eps;
        best = best.min(bracket);
    }
    Ok(best * moment_factor / p.powf((r as f64 + 1.0) / 2.0))
}

/// All objective specs the library ships, with representative parameters,
/// for regularity auditing.
pub fn shipped_objectives() -> Vec<(String, ObjectiveSpec, f64)> {
    vec![
        ("l2".into(), ObjectiveSpec::power_law(1.0), 0.5),
        ("l1".into(), ObjectiveSpec::power_law(0.5), 1.0),
        (
            "sep".into(),
            ObjectiveSpec {
                form: ObjectiveForm::Separation,
            },
            2.0,
        ),
        (
            "kl(l=2)".into(),
            ObjectiveSpec {
                form: ObjectiveForm::Kl { l: 2 },
            },
            0.25,
        ),
        (
            "kl(l=10)".into(),
            ObjectiveSpec {
                form: ObjectiveForm::Kl { l: 10 },
            },
            8.25,
        ),
        (
            "chi2(l=3)".into(),
            ObjectiveSpec {
                form: ObjectiveForm::Chi2 { l: 3 },
            },
            0.0,
        ),
    ]
}
