use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed request, e.g. an empty variable selector.
    #[error("usage error: {0}")]
    Usage(String),
    /// A mathematically undefined request (zero-mass conditioning, ε out of range).
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid system parameters or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Inputs to a decoder that cannot have come from the matching encoder.
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Self::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Self::Protocol(msg.into())
    }
}
