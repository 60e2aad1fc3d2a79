use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("calibration has no root for a in (1, {a_max}]: {reason}")]
    InfeasibleCalibration { a_max: f64, reason: String },

    #[error("degenerate calibration input: {0}")]
    DegenerateInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-empty batch against a resource model with zero capacity.
    #[error("schedule never completes: {0}")]
    Infeasible(String),

    #[error("batch of {size} requests exceeds the exhaustive oracle limit of {max}")]
    BatchTooLarge { size: usize, max: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by what the user asked for, as opposed to what happened
    /// while doing it. The CLI maps these to exit status 2.
    pub fn is_usage(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Infeasible(_)
        )
    }
}
