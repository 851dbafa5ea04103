use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid perimeter {0}: must be at least 1")]
    InvalidPerimeter(i64),
    #[error("calibration failed: {0}")]
    CalibrationFailed(String),
    #[error("work budget of {budget} peel steps exceeded while filling a hole")]
    WorkBudgetExceeded { budget: u64 },
    #[error("counter overflow in {0}")]
    Overflow(&'static str),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("non-positive rate {0}")]
    NonPositiveRate(f64),
    #[error("target b = {0} cannot be reached by a bounded atom")]
    UnreachableB(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("malformed step law file: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
