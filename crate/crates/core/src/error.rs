use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("radius {r} outside the admissible range ({lo}, {hi})")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("malformed field header: {0}")]
    MalformedHeader(String),

    #[error("field payload size mismatch: expected {expected} values, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("non-finite value in field data at element {0}")]
    NonFinite(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inadmissible (lambda, delta) = ({lambda}, {delta}): {reason}")]
    InadmissiblePair {
        lambda: f64,
        delta: f64,
        reason: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no admissible root of the exponent balance: {0}")]
    UnsolvableBalance(String),

    #[error("scale range: {0}")]
    ScaleRange(String),

    #[error("solver became unstable at t = {t}; last good time {last_good}")]
    Unstable { t: f64, last_good: f64 },

    #[error("scheduling: {0}")]
    Scheduling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
