//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used by callers that map failures to exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad input: malformed files, misaligned datasets, invalid parameters.
    Validation,
    /// The requested computation would exceed a configured resource bound.
    ResourceLimit,
    /// Underlying I/O failure.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("effect dimensionality mismatch: forward has {forward}, backward has {backward}")]
    DimensionMismatch { forward: usize, backward: usize },

    #[error("pmf sequence mixes dimensionalities: expected {expected}, found {found}")]
    MixedDimensions { expected: usize, found: usize },

    #[error("empty input: at least one entry is required")]
    EmptyDataset,

    #[error("support box of {cells} cells exceeds the memory cap of {cap} cells")]
    SupportTooLarge { cells: u128, cap: usize },

    #[error(
        "entry {entry}: effect component {dim} is {value}, outside the statistic's \
         declared range [{}, {bound}]", -bound
    )]
    EffectOutOfRange {
        entry: usize,
        dim: usize,
        value: i64,
        bound: i64,
    },

    #[error("entry {index}: correct count {correct} exceeds entry length {length}")]
    CorrectExceedsLength {
        index: usize,
        correct: u32,
        length: u32,
    },

    #[error("entry {index}: true-positive count {true_positive} exceeds entry length {length}")]
    TruePositiveExceedsLength {
        index: usize,
        true_positive: u32,
        length: u32,
    },

    #[error("entry {index}: entry length must be positive")]
    ZeroLength { index: usize },

    #[error("entry counts differ: first file has {u_count}, second has {v_count}")]
    EntryCountMismatch { u_count: usize, v_count: usize },

    #[error("entry {index}: lengths disagree between systems ({u_length} vs {v_length})")]
    LengthMismatch {
        index: usize,
        u_length: u32,
        v_length: u32,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("brute force is limited to {max} entries, got {n}")]
    BruteForceOversize { n: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::SupportTooLarge { .. } => ErrorCategory::ResourceLimit,
            Error::Io { .. } => ErrorCategory::Io,
            _ => ErrorCategory::Validation,
        }
    }
}
