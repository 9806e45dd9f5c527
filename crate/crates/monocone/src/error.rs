//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not a member of the set")]
    NotMember,
    #[error("point is not on the operator graph")]
    NotOnGraph,
    #[error("the set is empty")]
    EmptySet,
    #[error("sampling produced no graph points (region misses dom T)")]
    EmptySample,
    #[error("not compilable to a polyhedral graph: {0}")]
    NotCompilable(String),
    #[error("unsupported operator variant for this operation: {0}")]
    UnsupportedVariant(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("point is not in the operator domain")]
    NotInDomain,
    #[error("shift s = {s} must exceed the hypomonotonicity modulus r = {r}")]
    ShiftTooSmall { s: f64, r: f64 },
    #[error("segment leaves the operator domain at t = {t}")]
    SegmentLeavesDomain { t: f64 },
    #[error("no monotonicity window found at the requested point")]
    WindowNotFound,
    #[error("dimension {0} too large for enumeration")]
    DimensionTooLarge(usize),
    #[error("stratum enumeration would visit {0} signatures, over the cap")]
    TooManyStrata(usize),
    #[error("internal inconsistency, the two verification routes disagree: {0}")]
    RoutesDisagree(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
