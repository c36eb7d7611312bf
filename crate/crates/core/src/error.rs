use thiserror::Error;

/// Errors raised by the engine, the registry loader and the analysis layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The requested operator or state exceeds the dense-engine limit.
    #[error("capacity exceeded: {what} needs {requested} qubits, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },
    /// A precondition on an argument does not hold.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Malformed text input (graph, registry or channel spec).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
