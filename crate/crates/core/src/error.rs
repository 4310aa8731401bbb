use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (non-positive time, empty grid, ...).
    #[error("invalid parameter: {0}")]
    Domain(String),

    /// The requested quantity has no closed form in this regime.
    #[error("unsupported regime: {0}")]
    Unsupported(String),

    /// The trace ends before the amplitude falls to the 3 dB point.
    #[error("incomplete trace: {0}")]
    IncompleteTrace(String),

    /// No pulse could be distinguished from the noise floor.
    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
