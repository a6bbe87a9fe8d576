use alloc::string::String;
use core::fmt;

/// Failure modes shared by every operation in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on the arguments was violated (out-of-range index,
    /// insufficient derivative depth, unsupported model, ...).
    Usage(String),
    /// A numerical procedure did not reach its contract: series or
    /// quadrature non-convergence, missing bracket, overflow.
    Numerical(String),
    /// A coefficient the identity divides by vanishes at `x`.
    SingularPoint { x: f64, context: String },
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn singular(x: f64, context: impl Into<String>) -> Self {
        Error::SingularPoint {
            x,
            context: context.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::SingularPoint { x, context } => {
                write!(f, "singular point at x = {x}: {context}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
