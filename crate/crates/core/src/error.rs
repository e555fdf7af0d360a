use thiserror::Error;

/// Errors raised by the spectral pipeline, the norm routines and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("band limit {requested} exceeds the configured maximum {max}")]
    BandTooLarge { requested: usize, max: usize },

    #[error("band overflow: field band {field} exceeds grid band {grid}")]
    BandOverflow { field: usize, grid: usize },

    #[error("degree {degree} is outside the band limit {band}")]
    DegreeOutOfBand { degree: usize, band: usize },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("insufficient time resolution: doubling M from {samples} changed the norm by {relative_change:.3e}")]
    InsufficientTimeResolution { samples: usize, relative_change: f64 },

    #[error("division by a vanishing norm: {0}")]
    ZeroNorm(String),

    #[error(
        "Picard iteration is not contracting (ratio {ratio:.4} >= 1 for {streak} consecutive iterates); \
         the potential violates the smallness condition (C0 + C0^2)·‖V‖ <= 1/2"
    )]
    Divergence { ratio: f64, streak: usize },

    #[error("no convergence after {iterations} iterations (last increment {last_increment:.3e})")]
    MaxIterations { iterations: usize, last_increment: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
