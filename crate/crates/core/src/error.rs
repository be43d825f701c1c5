use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation (negative power,
    /// non-finite gain, non-positive noise power, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller violated a structural precondition (length mismatch,
    /// invalid configuration, solver precondition).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The cooperation threshold is undefined because the primary rate
    /// target is zero or the secondary budget is empty.
    #[error("cooperation threshold undefined: {0}")]
    ThresholdUndefined(&'static str),

    /// Simplex exceeded its pivot budget.
    #[error("simplex did not terminate within {0} pivots")]
    NumericalFailure(usize),

    /// Charnes-Cooper recovery hit a vanishing homogenizing variable.
    #[error("degenerate denominator: t = {0:e}")]
    DegenerateDenominator(f64),

    /// Two independent solution routes disagreed beyond tolerance.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}
