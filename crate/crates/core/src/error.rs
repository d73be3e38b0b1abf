use std::path::PathBuf;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("node {node} has zero degree; normalized convolutions need every degree > 0")]
    IsolatedNode { node: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid covariance: diagonal entry {index} is {value}")]
    Covariance { index: usize, value: f64 },
    #[error("did not converge: {0}")]
    Convergence(String),
    #[error("series diverges: ratio {ratio} is not below 1")]
    Divergent { ratio: f64 },
    #[error("not implemented: {0}")]
    NotImplemented(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
