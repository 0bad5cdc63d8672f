use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of two objects that must agree do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A value violates a documented invariant (range, simplex, bijection).
    #[error("invalid value: {0}")]
    Invalid(String),

    /// The request exceeds an enumeration or problem-size limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A strategy of the wrong kind was passed for a solution concept.
    #[error("strategy/concept mismatch: {0}")]
    Concept(String),

    /// A NaN or infinity appeared in a numeric pipeline.
    #[error("non-finite value: {0}")]
    Numeric(String),

    /// An experiment or operation precondition does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    /// Malformed input document; the message carries the field path.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown {kind}: {name}")]
    Unknown { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable identifier printed by the command-line tool.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Invalid(_) => "invalid",
            Error::Capacity(_) => "capacity",
            Error::Concept(_) => "concept",
            Error::Numeric(_) => "numeric",
            Error::Precondition(_) => "precondition",
            Error::Lp(_) => "lp",
            Error::Parse(_) => "parse",
            Error::Unknown { .. } => "unknown",
            Error::Io(_) => "io",
        }
    }

    /// Process exit status: 3 for capacity, 1 for numeric or solver
    /// failures, 2 for everything caused by bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            Error::Numeric(_) | Error::Lp(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
}
