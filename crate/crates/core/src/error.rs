//! Crate-wide error type.

use std::fmt;
use std::io;

/// Errors raised by the synchronization laboratory.
#[derive(Debug)]
pub enum Error {
    /// Zadoff-Chu root index is not coprime with the sequence length.
    InvalidRoot { root: usize, len: usize },
    /// Cyclic prefix must be shorter than the symbol body.
    InvalidCp { ng: usize, n: usize },
    /// Frame dimensioning violates a structural constraint.
    InvalidConfig(String),
    /// A sequence has the wrong length for the requested operation.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// A delay profile is empty, unordered or otherwise malformed.
    InvalidProfile(String),
    /// Timing offset outside the legal search placement range.
    OffsetOutOfRange { theta: usize, max: usize },
    /// All-zero timing metric cannot be normalized into a network input.
    DegenerateMetric,
    /// LOS prior must satisfy 0 < los_ratio < Ng.
    PriorViolation { los_ratio: usize, ng: usize },
    /// Label spec violates its invariants.
    InvalidLabelSpec(String),
    /// An operation over a batch received no samples.
    EmptyBatch,
    /// A caller-supplied parameter is out of its documented range.
    InvalidParam(String),
    /// A file has a bad magic number, version, header or payload length.
    Format(String),
    /// Underlying I/O failure.
    Io(io::Error),
    /// Training loss became non-finite.
    Diverged { epoch: usize, loss: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidRoot { root, len } => {
                write!(f, "root {root} is not coprime with sequence length {len}")
            }
            Error::InvalidCp { ng, n } => {
                write!(f, "cyclic prefix length {ng} must be shorter than body length {n}")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DimensionMismatch { what, expected, got } => {
                write!(f, "{what}: expected length {expected}, got {got}")
            }
            Error::InvalidProfile(msg) => write!(f, "invalid delay profile: {msg}"),
            Error::OffsetOutOfRange { theta, max } => {
                write!(f, "timing offset {theta} outside legal range 0..={max}")
            }
            Error::DegenerateMetric => write!(f, "timing metric is identically zero"),
            Error::PriorViolation { los_ratio, ng } => {
                write!(f, "LOS prior {los_ratio} must lie strictly inside (0, {ng})")
            }
            Error::InvalidLabelSpec(msg) => write!(f, "invalid label spec: {msg}"),
            Error::EmptyBatch => write!(f, "batch is empty"),
            Error::InvalidParam(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Diverged { epoch, loss } => {
                write!(f, "training diverged at epoch {epoch} (loss {loss})")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
