//! Error type shared across the crate.

/// Crate-wide error enum. Variants map onto the failure classes the CLI
/// distinguishes: bad inputs, exceeded enumeration caps, and construction
/// failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Lengths or arities that must agree do not.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A structurally invalid object (circuit, design, partition, ...).
    #[error("invalid structure: {0}")]
    Spec(String),
    /// An enumeration or search cap would be exceeded.
    #[error("cap exceeded: {0}")]
    Cap(String),
    /// A numeric parameter outside its allowed range.
    #[error("invalid parameter: {0}")]
    Param(String),
    /// A randomized or algebraic construction could not be completed.
    #[error("construction failed: {0}")]
    Construction(String),
    /// A gate is too wide for the requested player partition.
    #[error("gate too wide: {0}")]
    Width(String),
    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
    pub fn spec(msg: impl Into<String>) -> Self {
        Error::Spec(msg.into())
    }
    pub fn cap(msg: impl Into<String>) -> Self {
        Error::Cap(msg.into())
    }
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }
    pub fn construction(msg: impl Into<String>) -> Self {
        Error::Construction(msg.into())
    }
    pub fn width(msg: impl Into<String>) -> Self {
        Error::Width(msg.into())
    }
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
