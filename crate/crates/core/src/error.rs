use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("invalid net: {0}")]
    InvalidNet(String),

    #[error("transition `{transition}` is not enabled under {binding}")]
    NotEnabled { transition: String, binding: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An enumeration would exceed a configured safety cap.
    #[error("{what} too large: estimated {estimate} exceeds cap {cap}")]
    TooLarge { what: String, estimate: u128, cap: u128 },

    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("pnml: {message} (element <{element}> at {location})")]
    Pnml {
        element: String,
        location: String,
        message: String,
    },

    #[error("xml: {0}")]
    Xml(#[from] roxmltree::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidNet(msg.into())
    }
}
