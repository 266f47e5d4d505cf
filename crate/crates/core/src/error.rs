use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Problems found while decoding an S2WM or PPM file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("not an S2WM file (bad magic)")]
    BadMagic,
    #[error("unsupported S2WM version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown sampling scheme tag {0}")]
    UnknownScheme(u8),
    #[error("unknown payload kind tag {0}")]
    UnknownKind(u8),
    #[error("expected {expected} payload, found {found}")]
    KindMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("payload count {found} does not match grid (expected {expected})")]
    PayloadCount { expected: u64, found: u64 },
    #[error("length mismatch: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("invalid PPM header")]
    BadPpmHeader,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("band-limit must be at least {min}, got {got}")]
    InvalidBandLimit { got: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("band-limit mismatch: {0}")]
    BandLimitMismatch(String),
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("format error: {0}")]
    Decode(#[from] FormatError),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
