use thiserror::Error;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Domain,
    Numeric,
    Capacity,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Domain(String),

    #[error("node {node} has zero degree; restrict to a component or drop isolated nodes")]
    ZeroDegree { node: usize },

    #[error("iterative eigensolver did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("replication {index}: {source}")]
    Replication { index: usize, source: Box<Error> },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_)
            | Error::NodeOutOfRange { .. }
            | Error::Parse { .. }
            | Error::Io(_) => ErrorKind::Input,
            Error::Domain(_) | Error::ZeroDegree { .. } => ErrorKind::Domain,
            Error::NonConvergence { .. } | Error::Numeric(_) => ErrorKind::Numeric,
            Error::Capacity(_) => ErrorKind::Capacity,
            Error::Replication { source, .. } => source.kind(),
        }
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
