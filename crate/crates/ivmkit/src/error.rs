use thiserror::Error;

/// Library-wide error. Each variant maps to one CLI exit status.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl Error {
    /// 1 = assertion/model inconsistency, 2 = budget, 3 = bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assertion(_) | Error::Indeterminate(_) => 1,
            Error::Budget(_) => 2,
            Error::Schema(_) | Error::Invariant(_) | Error::Unsupported(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
