use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid kernel parameters: {0}")]
    InvalidKernel(String),

    #[error("duplicate design points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error(
        "kernel matrix not factorizable after jitter {max_jitter:e}; smallest eigenvalue estimate {min_eigenvalue:e}"
    )]
    Conditioning { max_jitter: f64, min_eigenvalue: f64 },

    #[error("predictive variance {value:e} below round-off tolerance {tolerance:e}")]
    NegativeVariance { value: f64, tolerance: f64 },

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("singular tridiagonal system at row {0}")]
    SingularSystem(usize),

    #[error("invalid mesh size {0}: must be 1/m for an integer m >= 2")]
    InvalidMesh(f64),

    #[error("posterior configuration error: {0}")]
    PosteriorConfig(String),

    #[error("non-finite density {value} at u = {point:?}")]
    NonFiniteDensity { value: f64, point: Vec<f64> },

    #[error("quadrature error: {0}")]
    Quadrature(String),

    #[error("rate fit error: {0}")]
    RateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
