use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("key length {len} is not a multiple of {bits_per_subkey} bits per sub-key")]
    KeyLength { len: usize, bits_per_subkey: u32 },

    #[error("invalid key: {0}")]
    InvalidKey(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sequence too short: need at least {min} elements, got {len}")]
    TooShort { min: usize, len: usize },

    #[error("phase value is NaN or infinite")]
    NonFinitePhase,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("trace store is empty")]
    EmptyTrace,

    #[error("{path}: line {line}: {msg}")]
    Trace { path: PathBuf, line: u64, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable category, used on the CLI's stderr and mapped
    /// onto FFI status codes.
    pub fn category(&self) -> &'static str {
        match self {
            Error::KeyLength { .. } | Error::InvalidKey(_) => "key",
            Error::LengthMismatch { .. } | Error::TooShort { .. } => "length",
            Error::NonFinitePhase | Error::InvalidParameter(_) => "parameter",
            Error::Degenerate(_) => "degenerate",
            Error::EmptyTrace | Error::Trace { .. } => "trace",
            Error::Config(_) => "config",
            Error::Io(_) | Error::Csv(_) => "io",
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}
