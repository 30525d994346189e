use std::path::PathBuf;

/// Errors raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("box side {side} is not an integer multiple of the lattice spacing")]
    IncommensurableSide { side: f64 },

    #[error("resolution too small: {sites} sites for {points} points")]
    ResolutionTooSmall { sites: usize, points: usize },

    #[error("covariance matrix of size {n} is not positive semidefinite after jitter (min eigenvalue {min_eig:.3e})")]
    NotPositiveSemidefinite { n: usize, min_eig: f64 },

    #[error("field sampling limited to {limit} points, got {got}")]
    TooManyFieldPoints { limit: usize, got: usize },

    #[error("spectral norm {norm} exceeds 1/2; the Gaussian TV bound does not apply")]
    BoundRegimeViolated { norm: f64 },

    #[error("allocation is not fair: {0}")]
    UnfairAllocation(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("samples live in different boxes")]
    MismatchedBoxes,

    #[error("radius {radius} must be below half the box side {half_side}")]
    RadiusTooLarge { radius: f64, half_side: f64 },

    #[error("need at least {needed} radial bins below k_max, got {got}")]
    InsufficientBins { needed: usize, got: usize },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("malformed input {path:?}: {reason}")]
    Format { path: Option<PathBuf>, reason: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
