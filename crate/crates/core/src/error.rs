use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("region out of bounds: offset {offset} + length {length} exceeds {available} bytes")]
    OutOfBounds {
        offset: usize,
        length: usize,
        available: usize,
    },

    #[error("region bookkeeping inconsistency: {0}")]
    RegionBookkeeping(String),

    #[error("invalid base64 at step {step}: {reason}")]
    Base64Decode { step: usize, reason: String },

    #[error("carrier is not a well-formed image: {0}")]
    CarrierNotWellFormed(String),

    #[error("unsupported carrier format: {0}")]
    UnsupportedFormat(String),

    #[error("payload too large: {actual} bytes exceeds the {max}-byte limit")]
    PayloadTooLarge { actual: usize, max: usize },

    #[error("transform chain contains a non-invertible step: {0}")]
    NonInvertibleStep(String),

    #[error("mutation not applicable: {0}")]
    MutationNotApplicable(String),

    #[error("marker must not be empty")]
    EmptyMarker,

    #[error("signature file line {line}: {reason}")]
    SignatureFile { line: usize, reason: String },

    #[error("corpus entry {id}: {reason}")]
    CorpusEntry { id: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
