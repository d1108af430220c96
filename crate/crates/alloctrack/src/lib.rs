//! Adaptive sample allocation for learning a set of discrete distributions
//! uniformly well.
//!
//! Given `K` unknown distributions on a common finite alphabet and a budget
//! of `n` draws, the library allocates draws so that the worst estimated
//! arm is as good as possible under a chosen distance (squared l2, l1 /
//! total variation, KL, chi-squared, Hellinger, separation). It provides:
//!
//! - the distance measures and their distribution-dependent objective
//!   parameters ([`distributions`], [`objectives`]);
//! - confidence schedules and optimistic upper bounds ([`confidence`]);
//! - oracle allocation solvers and the optimistic tracking algorithm
//!   ([`allocators`]);
//! - a simulation harness for risk, regret, coverage, and rate experiments
//!   ([`harness`]), all deterministic given a seed and independent of the
//!   worker-pool size.

pub mod allocators;
pub mod confidence;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod rng;

pub use allocators::{
    average_cost_oracle, deviation_band, largest_remainder, optimistic_tracking,
    optimistic_tracking_counts, oracle_kl, oracle_power_law, uniform, Allocation, DeviationBand,
    RoundRecord, TrackedDistance, TrackingTrajectory,
};
pub use confidence::{
    radius_hoeffding, upper_kl, upper_l1, upper_l2, upper_sep, ArmBound, BoundFamily,
    ConfidenceSchedule, UpperBound,
};
pub use distributions::{
    distance, ArmState, DiscreteDistribution, DistanceKind, EtaInterior, FDerivativeTable,
};
pub use error::{Error, Result};
pub use harness::{
    coverage_audit, estimate_risk, exact_risk_enumeration, regret, ProblemInstance, RegretReport,
    RiskEstimate, Scheme,
};
pub use objectives::{
    c_kl, c_l1, c_l2, c_sep, c_tilde_sep, exact_expected_distance, kl_remainder_constant,
    remainder_bound, sep_sandwich_constants, taylor_f_div, DistanceParams, ObjectiveForm,
    ObjectiveSpec, TaylorSpec,
};
pub use rng::{RngStream, RNG_ALGORITHM_ID};
