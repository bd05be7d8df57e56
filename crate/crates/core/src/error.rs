use thiserror::Error;

/// Errors raised across the estimation and simulation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("agent and target coincide; bearing and its Jacobian are undefined")]
    CoincidentPoints,

    #[error("loss family {found} does not support {operation}")]
    WrongFamily {
        operation: &'static str,
        found: &'static str,
    },

    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("no NLOS evidence: every bias estimate in the window is zero")]
    NoNlosEvidence,

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },

    #[error("unknown sweep parameter `{0}` (expected one of p_nlos, mu_nlos, eta, k_rtt, sigma_r)")]
    UnknownParameter(String),

    #[error("run {run} aborted at step {step}: {reason}")]
    RunAborted { run: u64, step: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
