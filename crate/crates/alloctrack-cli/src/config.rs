//! Experiment configuration: JSON schema, flag overrides, validation with
//! field-path errors, and the semantic hash stamped on every output.

use std::fmt;

use alloctrack::{DiscreteDistribution, DistanceKind};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// The machine-readable schema shipped with the binary
/// (`--print-schema`).
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config-schema.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Alloc,
    Simulate,
    Risk,
    Regret,
    Figure2,
    Table1,
    Rates,
    Lowerbound,
    Coverage,
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "alloc" => ExperimentKind::Alloc,
            "simulate" => ExperimentKind::Simulate,
            "risk" => ExperimentKind::Risk,
            "regret" => ExperimentKind::Regret,
            "figure2" => ExperimentKind::Figure2,
            "table1" => ExperimentKind::Table1,
            "rates" => ExperimentKind::Rates,
            "lowerbound" => ExperimentKind::Lowerbound,
            "coverage" => ExperimentKind::Coverage,
            other => {
                return Err(format!(
                    "unknown experiment '{other}' (expected one of alloc, simulate, risk, \
                     regret, figure2, table1, rates, lowerbound, coverage)"
                ))
            }
        })
    }
}

pub fn parse_distance(s: &str) -> Result<DistanceKind, String> {
    Ok(match s {
        "l2" => DistanceKind::L2Sq,
        "l1" => DistanceKind::L1,
        "tv" => DistanceKind::Tv,
        "kl" => DistanceKind::Kl,
        "chi2" => DistanceKind::Chi2,
        "hellinger" => DistanceKind::Hellinger,
        "sep" => DistanceKind::Separation,
        other => {
            return Err(format!(
                "unknown distance '{other}' (expected one of l2, l1, tv, kl, chi2, hellinger, sep)"
            ))
        }
    })
}

/// The eps-family declaration (`{"name": "p_eps", "l": 10}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: String,
    pub l: usize,
}

/// The full experiment configuration after merging file and flags.
/// Runtime-only fields (output path, thread count, verbosity) never enter
/// the semantic hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    #[serde(default)]
    pub distances: Vec<String>,
    pub n: Option<u64>,
    pub n_list: Option<Vec<u64>>,
    pub dists: Option<Vec<Vec<f64>>>,
    pub family: Option<FamilySpec>,
    pub eps_list: Option<Vec<f64>>,
    pub delta: Option<Value>,
    pub eta: Option<f64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub scheme: Option<String>,
    pub p0: Option<f64>,
    pub epsilon: Option<f64>,
    pub exploration_scale: Option<f64>,
}

/// A configuration error tagged with the offending field path.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at `{}`: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(path: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        path: path.to_string(),
        message: message.into(),
    })
}

/// The validated, resolved experiment description handed to the runner.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub experiment: ExperimentKind,
    pub distances: Vec<DistanceKind>,
    pub n: Option<u64>,
    pub n_list: Vec<u64>,
    pub dists: Option<Vec<DiscreteDistribution>>,
    pub family_l: usize,
    pub eps_list: Vec<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub reps: Option<u64>,
    pub seed: u64,
    pub scheme: Option<String>,
    pub p0: f64,
    pub epsilon: Option<f64>,
    pub exploration_scale: Option<f64>,
    /// Canonical JSON of the semantic config.
    pub canonical: String,
    /// Hex SHA-256 of `canonical`.
    pub hash: String,
}

impl ExperimentConfig {
    /// Merge `other` (flag-level settings) over `self`; set fields win.
    pub fn overridden_by(mut self, other: ExperimentConfig) -> Self {
        if other.experiment.is_some() {
            self.experiment = other.experiment;
        }
        if !other.distances.is_empty() {
            self.distances = other.distances;
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            n, n_list, dists, family, eps_list, delta, eta, reps, seed, scheme, p0, epsilon,
            exploration_scale
        );
        self
    }

    pub fn validate(&self, env_seed: Option<u64>) -> Result<ResolvedConfig, ConfigError> {
        let experiment: ExperimentKind = match &self.experiment {
            Some(name) => name
                .parse()
                .map_err(|m: String| ConfigError {
                    path: "experiment".into(),
                    message: m,
                })?,
            None => return err("experiment", "missing; pass --experiment or set it in --config"),
        };

        let mut distances = Vec::new();
        for (i, name) in self.distances.iter().enumerate() {
            distances.push(parse_distance(name).map_err(|m| ConfigError {
                path: format!("distances[{i}]"),
                message: m,
            })?);
        }
        if distances.is_empty() {
            distances = default_distances(experiment);
        }

        let dists = match &self.dists {
            None => None,
            Some(rows) => {
                let mut parsed = Vec::new();
                for (i, masses) in rows.iter().enumerate() {
                    match DiscreteDistribution::new(masses) {
                        Ok(d) => parsed.push(d),
                        Err(e) => return err(&format!("dists[{i}]"), e.to_string()),
                    }
                }
                if parsed.is_empty() {
                    return err("dists", "needs at least one distribution");
                }
                let l = parsed[0].len();
                for (i, d) in parsed.iter().enumerate() {
                    if d.len() != l {
                        return err(
                            &format!("dists[{i}]"),
                            format!("alphabet size {} differs from dists[0]'s {}", d.len(), l),
                        );
                    }
                }
                Some(parsed)
            }
        };

        if let Some(family) = &self.family {
            if family.name != "p_eps" {
                return err("family.name", format!("unknown family '{}'", family.name));
            }
            if family.l < 2 {
                return err("family.l", "alphabet size must be at least 2");
            }
        }
        let family_l = self.family.as_ref().map(|f| f.l).unwrap_or(10);

        let delta = match &self.delta {
            None => None,
            Some(Value::String(s)) if s == "auto" => None,
            Some(Value::Number(x)) => {
                let v = x.as_f64().unwrap_or(f64::NAN);
                if !(v > 0.0 && v < 1.0) {
                    return err("delta", format!("must lie in (0, 1), got {v}"));
                }
                Some(v)
            }
            Some(other) => {
                return err("delta", format!("expected a number or \"auto\", got {other}"))
            }
        };

        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta < 0.5) {
                return err("eta", format!("must lie in (0, 1/2), got {eta}"));
            }
        }
        if let Some(scale) = self.exploration_scale {
            if !scale.is_finite() || scale <= 0.0 {
                return err("exploration_scale", format!("must be positive, got {scale}"));
            }
        }
        if let Some(reps) = self.reps {
            if reps < 2 {
                return err("reps", "needs at least 2 replications");
            }
        }
        if let Some(n) = self.n {
            if n == 0 {
                return err("n", "budget must be positive");
            }
        }
        if let Some(list) = &self.n_list {
            if list.len() < 2 {
                return err("n_list", "needs at least two budgets");
            }
            for (i, &n) in list.iter().enumerate() {
                if n == 0 {
                    return err(&format!("n_list[{i}]"), "budget must be positive");
                }
            }
        }
        if let Some(list) = &self.eps_list {
            for (i, &e) in list.iter().enumerate() {
                if !(e > 0.0 && e < 1.0) {
                    return err(&format!("eps_list[{i}]"), format!("must lie in (0, 1), got {e}"));
                }
            }
        }
        let p0 = self.p0.unwrap_or(0.75);
        if !(0.5 < p0 && p0 < 1.0) {
            return err("p0", format!("must lie in (1/2, 1), got {p0}"));
        }
        if let Some(scheme) = &self.scheme {
            if !matches!(scheme.as_str(), "uniform" | "oracle" | "adaptive") {
                return err(
                    "scheme",
                    format!("unknown scheme '{scheme}' (expected uniform, oracle or adaptive)"),
                );
            }
        }

        // Per-experiment requirements.
        match experiment {
            ExperimentKind::Alloc | ExperimentKind::Simulate => {
                if dists.is_none() {
                    return err("dists", "this experiment needs explicit distributions");
                }
                if self.n.is_none() {
                    return err("n", "this experiment needs a budget");
                }
            }
            ExperimentKind::Risk | ExperimentKind::Regret | ExperimentKind::Coverage => {
                if dists.is_none() {
                    return err("dists", "this experiment needs explicit distributions");
                }
            }
            ExperimentKind::Figure2 | ExperimentKind::Table1 => {}
            ExperimentKind::Rates | ExperimentKind::Lowerbound => {}
        }

        let seed = self.seed.or(env_seed).unwrap_or(0);
        let n_list = self
            .n_list
            .clone()
            .unwrap_or_else(|| default_n_list(experiment));
        let eps_list = self
            .eps_list
            .clone()
            .unwrap_or_else(|| (1..=9).map(|i| i as f64 / 10.0).collect());

        // Canonical semantic config: the validated fields, sorted keys.
        let mut semantic = self.clone();
        semantic.seed = Some(seed);
        let canonical =
            serde_json::to_string(&semantic).expect("config serialization cannot fail");
        let hash = hex_digest(canonical.as_bytes());

        Ok(ResolvedConfig {
            experiment,
            distances,
            n: self.n,
            n_list,
            dists,
            family_l,
            eps_list,
            delta,
            eta: self.eta,
            reps: self.reps,
            seed,
            scheme: self.scheme.clone(),
            p0,
            epsilon: self.epsilon,
            exploration_scale: self.exploration_scale,
            canonical,
            hash,
        })
    }
}

fn default_distances(experiment: ExperimentKind) -> Vec<DistanceKind> {
    match experiment {
        ExperimentKind::Figure2 | ExperimentKind::Table1 => vec![
            DistanceKind::L2Sq,
            DistanceKind::L1,
            DistanceKind::Kl,
            DistanceKind::Separation,
        ],
        ExperimentKind::Lowerbound | ExperimentKind::Rates => vec![
            DistanceKind::L2Sq,
            DistanceKind::L1,
            DistanceKind::Separation,
        ],
        ExperimentKind::Coverage => vec![
            DistanceKind::L2Sq,
            DistanceKind::L1,
            DistanceKind::Kl,
            DistanceKind::Separation,
        ],
        _ => vec![DistanceKind::L2Sq],
    }
}

fn default_n_list(experiment: ExperimentKind) -> Vec<u64> {
    match experiment {
        ExperimentKind::Figure2 => vec![200, 500, 1000, 2000],
        _ => vec![500, 1000, 2000, 4000, 8000],
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
