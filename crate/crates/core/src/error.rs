use thiserror::Error;

use crate::hdcore::StorageKind;

#[derive(Debug, Error)]
pub enum HdcError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("bundle of an empty list")]
    EmptyBundle,

    #[error("sparse and dense operands cannot be mixed without explicit promotion")]
    MixedSparseDense,

    #[error("binding key must be bipolar, got {0}")]
    NonBipolarKey(StorageKind),

    #[error("{op} does not accept {found} storage")]
    Storage { op: &'static str, found: StorageKind },

    #[error("integer accumulator bound exceeds {limit}")]
    BoundOverflow { limit: i64 },

    #[error("invalid entry at coordinate {index}: {reason}")]
    InvalidEntry { index: usize, reason: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {index} out of range for alphabet of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("duplicate item {0}")]
    Duplicate(usize),

    #[error("encoded value does not belong to this codebook")]
    CodebookMismatch,

    #[error("operation undefined for {0} bundling")]
    BundlingMode(&'static str),

    #[error("adversarial noise needs a target symbol")]
    MissingTarget,

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("malformed container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HdcError>;

pub(crate) fn invalid(msg: impl Into<String>) -> HdcError {
    HdcError::InvalidParameter(msg.into())
}
