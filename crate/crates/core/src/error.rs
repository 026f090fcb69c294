use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in input")]
    NonFinite,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("at least {needed} pairs required, got {got}")]
    TooFewPairs { needed: usize, got: usize },

    #[error("rank-deficient input: rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("vector is not a unit vector (norm {0})")]
    NotUnit(f64),

    #[error("index {index} out of range for {len} pairs")]
    InvalidIndex { index: usize, len: usize },

    #[error("duplicate source points at indices {0} and {1}")]
    DuplicatePoint(usize, usize),

    #[error("sample has no base pair mapping 0 to 0")]
    MissingBasePair,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point lies outside the map's domain")]
    OutsideDomain,

    #[error("IAP hypothesis violated: {0}")]
    NotSpanning(String),

    #[error("no sample points near the requested direction")]
    NoPointsNearDirection,

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("oracle evaluation failed: {0}")]
    Oracle(String),

    #[error("not an orthogonal matrix (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("{0}")]
    Io(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid file: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
