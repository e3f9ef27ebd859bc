use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// The split between `Domain` and `Capacity` is preserved all the way to the
/// command line, where the two map to distinct exit codes.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The request is well-formed but exceeds a configured resource cap.
    #[error("capacity error: {0}")]
    Capacity(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
