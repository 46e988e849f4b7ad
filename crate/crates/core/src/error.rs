use std::io;

/// Errors produced anywhere in the recognition pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Data violates a type invariant (non-finite samples, bad metadata).
    #[error("validation failed: {0}")]
    Validation(String),

    /// The file is not a dataset file this reader understands.
    #[error("unrecognized file format: {0}")]
    Format(String),

    /// Header and payload disagree.
    #[error("corrupt dataset file: {0}")]
    Corruption(String),

    /// Filter design produced an unusable filter.
    #[error("filter design failed: {0}")]
    Design(String),

    /// A linear-algebra step could not be carried out.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by how the library was called rather than by
    /// the environment. The CLI maps these to its usage exit code.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Argument(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
