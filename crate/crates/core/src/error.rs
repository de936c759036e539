use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates its invariant; `name` is the parameter.
    #[error("{name} must be {requirement}")]
    InvalidParam {
        name: &'static str,
        requirement: &'static str,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("broadening_eta must be positive, got {0}")]
    NonPositiveBroadening(f64),

    #[error("cutoff {cutoff} too small for a cross-validation block of {block}")]
    CutoffTooSmall { cutoff: usize, block: usize },

    #[error("Hilbert-space dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("closed-form and numerical eigensystems disagree: {0}")]
    EigensystemMismatch(String),

    #[error("vanishing energy denominator between coupled states {0}")]
    DegenerateDenominator(String),

    #[error("invalid sweep: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
