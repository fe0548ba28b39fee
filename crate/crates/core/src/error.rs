//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The grid cannot resolve the requested scales or spectrum.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A parameter is out of its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A hypothesis needed by the requested computation fails.
    #[error("hypothesis error: {0}")]
    Hypothesis(String),
    /// A ball or window contains too few grid points.
    #[error("degenerate ball: {0}")]
    DegenerateBall(String),
    /// A shift is not a multiple of the grid spacing.
    #[error("alignment error: {0}")]
    Alignment(String),
    /// Luxemburg bisection could not bracket the norm.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Malformed file or record.
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
