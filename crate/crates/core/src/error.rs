use thiserror::Error;

/// Errors raised by the simulation and numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("time {t} is beyond the recorded range (known up to {known_until})")]
    OutOfRange { t: f64, known_until: f64 },

    #[error("unknown vertex {0}")]
    UnknownVertex(usize),

    #[error("vertex {vertex} is born at {birth_time}, after the queried time {t}")]
    VertexNotBorn { vertex: usize, birth_time: f64, t: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "numerical failure: {what} (estimate {estimate}, error estimate {error_estimate}, {evaluations} evaluations)"
    )]
    Numerical {
        what: String,
        estimate: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("horizon {horizon} too short for discount rate {theta}: truncated tail weight {tail:e} is not negligible")]
    HorizonTooShort { horizon: f64, theta: f64, tail: f64 },

    #[error("unreliable estimate: {excluded} of {total} replicas exhausted their event budget (limit 1%)")]
    Reliability { excluded: usize, total: usize },

    #[error("invalid regime: {0}")]
    Regime(String),

    #[error("malformed family tree at node {label:?}: {reason}")]
    MalformedTree { label: Vec<u32>, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
