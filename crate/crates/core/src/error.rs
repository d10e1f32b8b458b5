use std::io;

use thiserror::Error;

/// Errors produced anywhere in the gesture pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its valid domain (bad sizes, negative scales, ...).
    #[error("parameter out of domain: {0}")]
    Domain(String),
    /// Tensor or layer shapes do not chain.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A NaN or infinity showed up where only finite values are allowed.
    #[error("non-finite value: {0}")]
    NonFinite(String),
    /// A file did not follow the expected on-disk format.
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Process exit code for the command-line front end: 2 for domain errors, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Domain(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
