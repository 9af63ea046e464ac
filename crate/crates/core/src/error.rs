use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    InvalidRow { row: usize, message: String },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("invalid parameter `{name}`: {message}")]
    Parameter { name: &'static str, message: String },

    #[error("estimator not applicable: {0}")]
    Inapplicable(String),

    #[error("degenerate time t = {time}: {reason}")]
    DegenerateTime { time: f64, reason: String },

    #[error("group {group}: {source}")]
    Group {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter { name, message: message.into() }
    }

    pub(crate) fn degenerate(time: f64, reason: impl Into<String>) -> Self {
        Error::DegenerateTime { time, reason: reason.into() }
    }

    /// True for errors caused by a time point with no cases or no controls.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::DegenerateTime { .. } => true,
            Error::Group { source, .. } => source.is_degenerate(),
            _ => false,
        }
    }

    /// True for numerical failures (integration, internal consistency).
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric(_) => true,
            Error::Group { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
