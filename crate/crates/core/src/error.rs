use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("input error: {0}")]
    Input(String),

    /// Out-of-range algorithm parameter.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Problem too large for an exhaustive oracle.
    #[error("size error: {size} points exceeds brute-force cap {cap}")]
    Size { size: usize, cap: usize },

    /// A bounded adversary tried to hold more cards than its capacity.
    #[error("protocol violation at step {step}: {reason}")]
    Protocol { step: usize, reason: String },

    /// File parse failure, with 1-based line number when known.
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    /// A structural guarantee of an algorithm did not hold.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-friendly class name, used in result tables.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Input(_) => "input",
            Error::Parameter(_) => "parameter",
            Error::Size { .. } => "size",
            Error::Protocol { .. } => "protocol",
            Error::Parse { .. } => "parse",
            Error::Invariant(_) => "invariant",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
