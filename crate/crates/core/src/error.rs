use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid resolution error: {0}")]
    Resolution(String),

    /// Panel quadrature did not reach the requested tolerance.
    #[error("quadrature failed to converge for {what}: worst panel error {worst_error:.3e} at theta={worst_theta:.6}")]
    Quadrature {
        what: String,
        worst_error: f64,
        worst_theta: f64,
    },

    /// A sample variance (or residual variance) that must be positive was zero.
    #[error("degenerate variance: {0}")]
    Degenerate(String),

    #[error("unsupported chaos order q={0}")]
    UnsupportedOrder(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("replication with seed {seed:#018x} failed: {source}")]
    Replication {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
