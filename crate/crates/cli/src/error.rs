use thiserror::Error;

/// Failures reported by the command layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("first-in-first-out steady state does not exist: convergence margin {margin:.6} <= 0 (critical total density {critical:.6})")]
    Unstable { margin: f64, critical: f64 },
    #[error("flexible-order steady state does not exist: convergence margin {margin:.6} <= 0")]
    UnstableFo { margin: f64 },
    #[error("closed-form distributions need delta-s = 0, got {delta_s}")]
    UnsupportedDeltaS { delta_s: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] crossflow_core::Error),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config file {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
