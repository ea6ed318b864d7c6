use thiserror::Error;

/// Errors shared across the estimator modules.
#[derive(Debug, Error)]
pub enum DimlabError {
    /// A scale-dependent operation was asked to look below the cloud's resolution floor.
    #[error("scale {requested} is below the cloud resolution {resolution}")]
    ResolutionExceeded { requested: f64, resolution: f64 },

    /// A slope or curve fit needs more dyadic scales than the cloud provides.
    #[error("insufficient scales: need {needed}, have {available}")]
    InsufficientScales { needed: usize, available: usize },

    /// No (R, r) anchor pair satisfies the two-scale constraints for this theta.
    #[error("no valid scale pairs for theta = {theta} at resolution {resolution}")]
    NoValidScalePairs { theta: f64, resolution: f64 },

    /// The quasi-Assouad extrapolation needs more curve points near theta = 1.
    #[error("insufficient spectrum tail: need {needed} points with theta >= {cutoff}")]
    InsufficientTail { needed: usize, cutoff: f64 },

    /// Frequency cutoff past the point where the discrete measure stops approximating.
    #[error("frequency cutoff {cutoff} exceeds 1/(4 delta) = {max_valid}")]
    CutoffExceedsResolution { cutoff: f64, max_valid: f64 },

    /// Shell decay fits need a minimum number of dyadic shells.
    #[error("insufficient shells: need {needed}, have {available}")]
    InsufficientShells { needed: usize, available: usize },

    #[error("ambient dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown example id: {0}")]
    UnknownExample(String),

    #[error("unsupported reference combination: {0}")]
    UnsupportedReference(String),
}

pub type Result<T> = std::result::Result<T, DimlabError>;

impl DimlabError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        DimlabError::InvalidParameter(msg.into())
    }
}
