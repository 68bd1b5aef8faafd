use alloc::string::String;
use core::fmt;

/// Errors produced by the simulation core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Two vectors that must share a dimension do not.
    DimensionMismatch { expected: usize, found: usize },
    /// A vector whose norm is required to be positive is (numerically) zero.
    DegenerateVector,
    /// A non-finite value (NaN or infinity) was about to enter a vector.
    NonFinite,
    /// An operation that needs at least one element received none.
    Empty(&'static str),
    /// A configuration field failed validation.
    InvalidConfig { field: &'static str, reason: String },
    /// An enabled runtime cross-check found an inconsistency.
    Verification(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::DegenerateVector => write!(f, "vector norm is too close to zero"),
            Error::NonFinite => write!(f, "non-finite value (NaN or infinity)"),
            Error::Empty(what) => write!(f, "{what} must not be empty"),
            Error::InvalidConfig { field, reason } => {
                write!(f, "invalid config field `{field}`: {reason}")
            }
            Error::Verification(check) => write!(f, "verification check failed: {check}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
