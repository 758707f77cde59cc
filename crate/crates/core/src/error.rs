use thiserror::Error;

/// Errors shared by every pipeline in the crate.
///
/// `NotCertifiedAtResolution` and `PrerequisitesUnmet` are verdicts about the
/// tabulated search resolution, not disproofs: the underlying conditions are
/// asymptotic and a coarser grid simply cannot witness them. Callers that
/// drive exit codes should treat those two separately from hard errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent p = {p}: p must be a finite real >= 1")]
    InvalidExponent { p: f64 },

    #[error("conjugate Sobolev exponent undefined for p = {p}, n = {n}: requires 1 <= p < n")]
    ExponentUndefined { p: f64, n: usize },

    #[error("exponent precondition violated: {0}")]
    ExponentError(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("family must contain at least one member")]
    EmptyFamily,

    #[error("operation requires a one-dimensional grid, got dim = {got}")]
    DimensionError { got: usize },

    #[error("shape error: {0}")]
    ShapeError(String),

    #[error("tiling misaligned with grid: {0}")]
    TilingMisaligned(String),

    #[error("landmarks insufficient: point {point} has equicontinuity gap {gap:e} >= epsilon")]
    LandmarksInsufficient { point: usize, gap: f64 },

    #[error("member {member} violates the stated bounds: {reason}")]
    BoundsViolated { member: usize, reason: String },

    #[error("cover contract violated: claimed radius {claimed:e}, measured distance {measured:e}")]
    ContractViolation { claimed: f64, measured: f64 },

    #[error("prerequisites unmet: {0}")]
    PrerequisitesUnmet(String),

    #[error("not certified at this resolution: {0}")]
    NotCertifiedAtResolution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("size mismatch for member '{label}': expected {expected} values, got {got}")]
    SizeMismatch {
        label: String,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in member '{label}' at index {index}")]
    NonFiniteValue { label: String, index: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is a resolution verdict rather than a hard failure.
    pub fn is_resolution_verdict(&self) -> bool {
        matches!(
            self,
            Error::NotCertifiedAtResolution(_) | Error::PrerequisitesUnmet(_)
        )
    }
}
