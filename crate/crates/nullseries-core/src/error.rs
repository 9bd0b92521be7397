use alloc::string::String;
use core::fmt;

/// Errors raised by the pipeline. The variants follow the failure classes the
/// CLI maps onto exit codes.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    Domain(String),
    /// Index or argument outside a finite table.
    Range(String),
    /// Request beyond what was computed or supported (depth, order, frequency).
    Capability(String),
    /// A contract on the inputs of an operation is violated.
    Contract(String),
    /// A computed value is unusable (nonpositive weight, NaN, ...).
    Value(String),
    /// Array sizes do not match.
    Shape(String),
    /// Grid too coarse for the requested depth.
    Resolution(String),
    /// The constructed series is identically zero within tolerance.
    Triviality(String),
    /// Precondition on sampled data violated.
    Precondition(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Error::Domain(m) => ("domain error", m),
            Error::Range(m) => ("range error", m),
            Error::Capability(m) => ("capability error", m),
            Error::Contract(m) => ("contract error", m),
            Error::Value(m) => ("value error", m),
            Error::Shape(m) => ("shape error", m),
            Error::Resolution(m) => ("resolution error", m),
            Error::Triviality(m) => ("triviality", m),
            Error::Precondition(m) => ("precondition error", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl core::error::Error for Error {}
