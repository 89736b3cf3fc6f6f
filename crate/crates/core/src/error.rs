use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the transfer engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("{path}: expected an 8-bit {expected} PNG, found {found}")]
    ColorType {
        path: PathBuf,
        expected: &'static str,
        found: String,
    },

    #[error("invalid label {value} at (row {row}, col {col}); labels must lie in 0..=18")]
    InvalidLabel { value: u8, row: usize, col: usize },

    #[error("tensor container: bad magic {found:02x?}, expected \"SPT1\"")]
    BadMagic { found: [u8; 4] },

    #[error("tensor container: unsupported dtype code {0:#04x} (only 0x01 = f32 LE)")]
    DtypeMismatch(u8),

    #[error("tensor container: unsupported rank {0}, expected 2 or 3")]
    BadRank(u8),

    #[error("tensor container truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("tensor container has {0} trailing bytes after the payload")]
    TrailingBytes(usize),

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("pyramid level {level}: expected {expected_h}x{expected_w}, found {found_h}x{found_w}")]
    Schedule {
        level: usize,
        expected_h: usize,
        expected_w: usize,
        found_h: usize,
        found_w: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid recipe: {0}")]
    Recipe(String),

    #[error("empty {0} region")]
    EmptyRegion(String),

    #[error("unsupported pyramid: {0}")]
    UnsupportedPyramid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
