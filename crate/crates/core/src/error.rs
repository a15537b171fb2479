use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the weylab library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension {got} is not supported (need at least {min})")]
    InvalidDimension { got: usize, min: usize },

    #[error("cutoff radius {0} is not supported (need R >= 1)")]
    InvalidRadius(f64),

    #[error("lattice basis would hold about {estimate} points, budget is {budget}")]
    BasisTooLarge { estimate: usize, budget: usize },

    #[error("grid of {points} points per axis cannot resolve band limit {band_limit}")]
    GridTooSmall { points: usize, band_limit: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("function must be real-valued: {0}")]
    NotRealValued(String),

    #[error("exponent p = {0} is not supported (need p >= 1)")]
    InvalidExponent(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank window [{lo}, {hi}] is empty for a spectrum of length {len}")]
    EmptyWindow { lo: usize, hi: usize, len: usize },

    #[error("singular value decomposition failed to converge")]
    SvdNoConvergence,

    #[error("hermiticity check failed for {label}: residual {residual:e}")]
    NotHermitian { label: String, residual: f64 },

    #[error("invalid experiment config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
