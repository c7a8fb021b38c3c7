use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("mixture parse error: {0}")]
    MixtureParse(String),

    #[error("nu''(q) vanishes at q = {q}; nu''(q)^(-1/2) is singular there")]
    Singularity { q: f64 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),

    #[error("{what} is outside the domain: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("disorder needs {needed} bytes, budget is {budget} bytes")]
    Capacity { needed: u128, budget: u128 },

    #[error(
        "no direction reached the Rayleigh target {target:.6} at step {step}; best achieved {achieved:.6}"
    )]
    SpectralFailure {
        step: usize,
        achieved: f64,
        target: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("disorder mismatch: {0}")]
    DisorderMismatch(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
