//! `alloctrack` — run sample-allocation experiments from the command line.
//!
//! One experiment per invocation. Settings come from a JSON config file
//! (`--config`) and/or flags; flags win. Every run writes a metadata
//! header (JSON) plus one CSV per result table into `--out`, each stamped
//! with the seed and a hash of the semantic configuration. Reruns with
//! the same configuration and seed are byte-identical regardless of
//! `--threads`.
//!
//! Exit status: 0 on success, 1 on an invalid configuration, 2 on a
//! runtime failure (partial outputs are removed).

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, ExperimentConfig, CONFIG_SCHEMA};
use output::OutputDir;

#[derive(Parser, Debug)]
#[command(name = "alloctrack", version, about = "Adaptive sample-allocation experiments")]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// One of: alloc, simulate, risk, regret, figure2, table1, rates,
    /// lowerbound, coverage.
    #[arg(long)]
    experiment: Option<String>,
    /// Distance(s): l2, l1, tv, kl, chi2, hellinger, sep (comma separated).
    #[arg(long, value_delimiter = ',')]
    distance: Vec<String>,
    /// Sampling budget.
    #[arg(long)]
    n: Option<u64>,
    /// Budget grid for rate experiments, comma separated.
    #[arg(long = "n-list", value_delimiter = ',')]
    n_list: Option<Vec<u64>>,
    /// Distributions as a JSON array of mass arrays,
    /// e.g. "[[0.75,0.25],[0.5,0.5]]".
    #[arg(long)]
    dists: Option<String>,
    /// Failure budget for the adaptive scheme; a number or "auto" for the
    /// per-distance default.
    #[arg(long)]
    delta: Option<String>,
    /// Interior parameter for KL/separation experiments.
    #[arg(long)]
    eta: Option<f64>,
    /// Skew grid for the epsilon-family experiments, comma separated.
    #[arg(long = "eps-list", value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    /// Alphabet size of the epsilon family.
    #[arg(long = "family-l")]
    family_l: Option<usize>,
    /// Monte Carlo replications.
    #[arg(long)]
    reps: Option<u64>,
    /// Base seed (fallback: the ALLOCTRACK_SEED environment variable,
    /// then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Scheme for risk/regret experiments: uniform, oracle or adaptive.
    #[arg(long)]
    scheme: Option<String>,
    /// Bernoulli parameter of the lower-bound construction.
    #[arg(long)]
    p0: Option<f64>,
    /// Skew of the lower-bound construction (default 1/(4 sqrt(n))).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Scale on the confidence radius used to rank arms; 1 is the
    /// published rule.
    #[arg(long = "exploration-scale")]
    exploration_scale: Option<f64>,
    /// Worker threads (0 = machine parallelism). Results do not depend on
    /// this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, default_value = "alloctrack_out")]
    out: PathBuf,
    /// Also dump per-round trajectory records (simulate experiment).
    #[arg(long)]
    verbose: bool,
    /// Print the configuration schema and exit.
    #[arg(long = "print-schema")]
    print_schema: bool,
}

fn flags_to_config(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let dists = match &cli.dists {
        None => None,
        Some(raw) => Some(
            serde_json::from_str::<Vec<Vec<f64>>>(raw).map_err(|e| ConfigError {
                path: "dists".into(),
                message: format!("not a JSON array of mass arrays: {e}"),
            })?,
        ),
    };
    let delta = match &cli.delta {
        None => None,
        Some(raw) if raw == "auto" => Some(serde_json::Value::String("auto".into())),
        Some(raw) => {
            let v: f64 = raw.parse().map_err(|_| ConfigError {
                path: "delta".into(),
                message: format!("expected a number or \"auto\", got '{raw}'"),
            })?;
            Some(serde_json::json!(v))
        }
    };
    Ok(ExperimentConfig {
        experiment: cli.experiment.clone(),
        distances: cli.distance.clone(),
        n: cli.n,
        n_list: cli.n_list.clone(),
        dists,
        family: cli.family_l.map(|l| config::FamilySpec {
            name: "p_eps".into(),
            l,
        }),
        eps_list: cli.eps_list.clone(),
        delta,
        eta: cli.eta,
        reps: cli.reps,
        seed: cli.seed,
        scheme: cli.scheme.clone(),
        p0: cli.p0,
        epsilon: cli.epsilon,
        exploration_scale: cli.exploration_scale,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{CONFIG_SCHEMA}");
        return ExitCode::SUCCESS;
    }

    let resolved = match load_and_validate(&cli) {
        Ok(resolved) => resolved,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("failed to configure the worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    let threads = rayon::current_num_threads();

    let mut out = match OutputDir::new(&cli.out, &resolved) {
        Ok(out) => out,
        Err(e) => {
            eprintln!("{e:#}");
            return ExitCode::from(2);
        }
    };
    let result = out
        .write_metadata(&resolved, threads)
        .map(|_| ())
        .and_then(|_| run::run(&resolved, &mut out, cli.verbose));
    match result {
        Ok(()) => {
            for path in out.paths() {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("experiment failed: {e:#}");
            out.discard();
            ExitCode::from(2)
        }
    }
}

fn load_and_validate(cli: &Cli) -> anyhow::Result<config::ResolvedConfig> {
    let file_config: ExperimentConfig = match &cli.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&raw)
                .map_err(|e| anyhow::anyhow!("config error in {}: {e}", path.display()))?
        }
    };
    let flag_config = flags_to_config(cli).map_err(|e| anyhow::anyhow!("{e}"))?;
    let merged = file_config.overridden_by(flag_config);
    let env_seed = std::env::var("ALLOCTRACK_SEED")
        .ok()
        .and_then(|v| v.parse().ok());
    merged
        .validate(env_seed)
        .map_err(|e| anyhow::anyhow!("{e}"))
}
