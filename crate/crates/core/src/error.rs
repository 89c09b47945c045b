use thiserror::Error;

/// Errors raised by the library surface.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem data has inconsistent dimensions or structure.
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
