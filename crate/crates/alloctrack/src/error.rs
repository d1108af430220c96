use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distributions have different alphabet sizes: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid probability masses: {0}")]
    InvalidMasses(String),
    #[error("arm has zero pulls; empirical quantities are undefined")]
    ZeroPulls,
    #[error("division by a zero probability mass at symbol {0}")]
    DivisionByZeroMass(usize),
    #[error("alphabet size {0} exceeds the subset-enumeration cap of {1}")]
    AlphabetTooLarge(usize, usize),
    #[error("remainder constant C_(f,r+1) was not supplied")]
    MissingConstant,
    #[error("budget must be positive, got {0}")]
    NonpositiveBudget(f64),
    #[error("all objective parameters are zero; allocation is undetermined")]
    AllZeroParams,
    #[error("budget {n} is smaller than the number of arms {k}")]
    BudgetTooSmall { n: f64, k: usize },
    #[error("objective failed the regularity audit: {0}")]
    NonconvexObjective(String),
    #[error("deviation band requires B > 0, got {0}")]
    DegenerateB(f64),
    #[error("enumeration would visit {0} outcomes, above the cap of {1}")]
    TooManyOutcomes(u128, u64),
    #[error("distance {0} has no allocation scheme; only risk evaluation is supported")]
    UnsupportedDistance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
