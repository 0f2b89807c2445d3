use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed rational {text:?}: {reason}")]
    Parse { text: String, reason: String },

    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),

    #[error("success probability p_{index} = {value} must lie strictly between 0 and 1")]
    InvalidProbability { index: usize, value: String },

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is outside the supported range {min}..={max}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("budget exceeded: {what} needs {required}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("deadline of {seconds} s exceeded while {what}")]
    DeadlineExceeded { what: String, seconds: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::BudgetExceeded { .. } | Error::DeadlineExceeded { .. } => 3,
            _ => 1,
        }
    }
}
