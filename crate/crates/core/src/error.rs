use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A computation exceeded a configured cap (work, memory, enumeration size).
    #[error("resource limit: {0}")]
    Resource(String),
    /// Stored or derived data failed an internal consistency check.
    #[error("integrity failure: {0}")]
    Integrity(String),
    /// A construction that is guaranteed only at large scale failed at the
    /// requested scale; the message names the first inequality that broke.
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub fn resource(msg: impl Into<String>) -> Error {
    Error::Resource(msg.into())
}

pub fn integrity(msg: impl Into<String>) -> Error {
    Error::Integrity(msg.into())
}

pub fn construction(msg: impl Into<String>) -> Error {
    Error::Construction(msg.into())
}
