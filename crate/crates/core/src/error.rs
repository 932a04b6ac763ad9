use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at coordinate {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("grid resolution mismatch: {0} vs {1}")]
    ResolutionMismatch(f64, f64),

    #[error("no closed-form mean for query under this distribution and no Monte-Carlo budget supplied")]
    NoClosedForm,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schedule is not nonincreasing at t={t}: {prev} -> {next}")]
    IncreasingSchedule { t: usize, prev: f64, next: f64 },

    #[error("no saturation within horizon {horizon}")]
    NoSaturation { horizon: usize },

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("composition bound requires alpha <= 1 (e^a - 1 <= 2a fails), got alpha = {0}")]
    AlphaTooLarge(f64),

    #[error("missing noise log for round {0}")]
    MissingNoiseLog(usize),

    #[error("empty transcript")]
    EmptyTranscript,

    #[error("incompatible pairing: {0}")]
    IncompatiblePairing(String),

    #[error("state escaped the radius-{radius} ball at round {round} (norm {norm})")]
    Escape { round: usize, norm: f64, radius: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
