use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A numerical routine failed to converge. `index` identifies the offending
    /// eigenvalue, trial or realization.
    #[error("numerical failure at index {index}: {message}")]
    Numeric { index: usize, message: String },

    #[error("cover misses a set of measure {uncovered:e} of the target")]
    Coverage { uncovered: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidDistribution(_)
            | Error::InvalidArgument(_)
            | Error::Coverage { .. } => 2,
            Error::Index(_) | Error::Numeric { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}
