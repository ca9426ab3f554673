use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced while loading inputs or assembling a simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// A CSV or key-value input could not be parsed.
    #[error("{origin}:{line}: {message}")]
    Parse {
        /// File path or a synthetic origin like `<string>`.
        origin: String,
        /// 1-based line number of the offending input line.
        line: usize,
        message: String,
    },
    /// A parsed structure violates one of its invariants.
    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },
    /// Requested generation constraints cannot be met.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// Name not present in the adaptation-logic registry.
    #[error("unknown adaptation logic `{name}` (expected one of: {known})")]
    UnknownLogic { name: String, known: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(origin: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }
}
