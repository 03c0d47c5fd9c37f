//! Error type shared by every module in the crate.

use core::fmt;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Failure modes of the generators, kernels, detectors, and recovery loops.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Sparsity level incompatible with the signal dimension (requires `1 <= k < n`).
    InvalidSparsity { k: usize, n: usize },
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize },
    /// A sensing-matrix column has zero norm, so correlations are undefined.
    DegenerateColumn { col: usize },
    /// The restricted system is numerically rank deficient.
    SingularSystem,
    /// Detector iteration index outside `1..=K`.
    InvalidIteration { iteration: usize, sparsity: usize },
    /// The variance-schedule denominators are no longer positive; the caller
    /// must stop iterating.
    ScheduleOverflow { iteration: usize },
    /// The binary ratio is undefined at `sigma1 = 0`; use the last-iteration form.
    MustUseLastIteration,
    /// Exhaustive search would exceed its combinatorial budget.
    CombinatorialBudget { candidates: u128, budget: u128 },
    /// Argument outside the function's domain (e.g. `ln_gamma` of a non-positive value).
    DomainError(&'static str),
    /// Catch-all for invalid argument combinations.
    InvalidArgument(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSparsity { k, n } => {
                write!(f, "invalid sparsity: k={k} must satisfy 1 <= k < n={n}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::DegenerateColumn { col } => {
                write!(f, "column {col} has zero norm")
            }
            Error::SingularSystem => write!(f, "restricted system is rank deficient"),
            Error::InvalidIteration { iteration, sparsity } => {
                write!(f, "iteration {iteration} outside 1..={sparsity}")
            }
            Error::ScheduleOverflow { iteration } => {
                write!(f, "variance schedule degenerate at iteration {iteration}")
            }
            Error::MustUseLastIteration => {
                write!(f, "sigma1 = 0: use the last-iteration ratio")
            }
            Error::CombinatorialBudget { candidates, budget } => {
                write!(f, "search space {candidates} exceeds budget {budget}")
            }
            Error::DomainError(what) => write!(f, "domain error: {what}"),
            Error::InvalidArgument(what) => write!(f, "invalid argument: {what}"),
        }
    }
}

impl core::error::Error for Error {}
