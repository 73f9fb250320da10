//! Error taxonomy shared by the whole crate.
//!
//! Three coarse classes map one-to-one onto the CLI exit codes:
//! validation (bad input, exit 2), numeric (a solver or formula failed at
//! run time, exit 3) and I/O (exit 4).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input rejected before any computation (bad parameters, incompatible
    /// family/profile combination, malformed config or data file).
    #[error("validation error: {0}")]
    Validation(String),

    /// A numerical method failed while running (blow-up, non-convergence,
    /// domain restriction hit, resolution too coarse).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Filesystem problem while reading inputs or writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Exit code the CLI reports for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            Error::Numeric(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
