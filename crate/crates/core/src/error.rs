use thiserror::Error;

/// Errors raised across the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice size: {0}")]
    LatticeSize(String),

    #[error("site index {index} out of range for {n_sites} sites")]
    SiteIndex { index: usize, n_sites: usize },

    #[error("cannot hop out of empty site {0}")]
    EmptySource(usize),

    #[error("dimension guard exceeded: {what} = {value} (limit {limit})")]
    DimensionGuard {
        what: &'static str,
        value: u128,
        limit: u128,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear solver failed: {reason} (residual {residual:e})")]
    Solver { reason: String, residual: f64 },

    #[error("eigensolver did not converge: residual {0:e}")]
    Eigensolver(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("Renyi-2 estimator saturated: {0}")]
    Saturation(String),

    #[error("optimization diverged: {0}")]
    Divergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
