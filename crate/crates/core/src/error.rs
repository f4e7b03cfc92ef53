use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field has zero power")]
    ZeroField,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cannot load image {path}: {reason}")]
    ImageLoad { path: String, reason: String },

    #[error("malformed hologram: {0}")]
    HologramFormat(String),

    #[error("malformed CF64 field file: {0}")]
    FieldFormat(String),

    #[error("malformed PGM image: {0}")]
    PgmFormat(String),

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("degenerate inference: {0}")]
    Degenerate(String),

    #[error("carrier undersampled: {0}")]
    Undersampled(String),

    #[error("no carrier sideband found: {0}")]
    NoCarrier(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
