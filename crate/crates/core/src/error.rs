use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}: line {line}, column {column}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        reason: String,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario config: {0}")]
    Config(String),

    #[error("infeasible: required Cp {required:.4} exceeds surface maximum {max:.4}")]
    Infeasible { required: f64, max: f64 },

    #[error("closed loop is unstable: characteristic roots {roots:?}")]
    Unstable { roots: [(f64, f64); 2] },

    #[error("step-response fit rejected: {0}")]
    FitRejected(String),

    #[error("non-finite `{signal}` at step {step} (t = {t:.3} s)")]
    NonFinite {
        step: usize,
        t: f64,
        signal: &'static str,
    },

    #[error("logs are not aligned: {0}")]
    Misaligned(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
