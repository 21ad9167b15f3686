use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes and C error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: malformed files, violated preconditions, inconsistent shapes.
    Validation,
    /// The numbers themselves are unusable: non-PD matrices, rank loss, degenerate universes.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("series `{series}` shares fewer than 2 dates with the other series")]
    Alignment { series: String },

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("constraint system is rank deficient")]
    RankDeficient,

    #[error("degenerate universe: mean returns are proportional to the ones vector")]
    DegenerateUniverse,

    #[error("insufficient capital: withdrawal of {requested:.2} exceeds capital {available:.2}")]
    InsufficientCapital { requested: f64, available: f64 },

    #[error("data gap for `{asset}` at {date}: last price is {trading_days} trading days old")]
    DataGap {
        asset: String,
        date: NaiveDate,
        trading_days: usize,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::DegenerateSeries(_)
            | Error::NotPositiveDefinite { .. }
            | Error::RankDeficient
            | Error::DegenerateUniverse
            | Error::Numerical(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }

    /// Process exit code: 2 for validation failures, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.position() {
            Some(pos) => Error::Parse {
                line: pos.line(),
                message: e.to_string(),
            },
            None => Error::Io(e.to_string()),
        }
    }
}
