use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge {edge:?} is not legal in part {part}: {reason}")]
    IllegalEdge {
        edge: Vec<u32>,
        part: usize,
        reason: &'static str,
    },
    #[error("duplicate edge {0:?}")]
    DuplicateEdge(Vec<u32>),
    #[error("part sizes must be positive, got {0:?}")]
    BadPartSizes(Vec<usize>),
    #[error("uniformity must be at least 2, got {0}")]
    BadUniformity(usize),
    #[error("vertex id {0} out of range (host has {1} vertices)")]
    OutOfRange(u32, usize),
    #[error("degree arity s={s} out of range for k={k}")]
    BadArity { s: usize, k: usize },
    #[error("vertex {vertex} does not belong to part {part}")]
    WrongPart { vertex: u32, part: usize },
    #[error("vertex {0} is not housed in any non-exceptional block")]
    UnhousedVertex(u32),
    #[error("exact mode needs {needed} evaluations, cap is {cap}")]
    TooLarge { needed: u128, cap: u128 },
    #[error("construction split leaves an empty side")]
    DegenerateSplit,
    #[error("ell={ell} out of range for k={k} (need 1 <= ell <= k-2)")]
    BadEll { ell: usize, k: usize },
    #[error("pattern uniformity {pattern} differs from host uniformity {host}")]
    ArityMismatch { pattern: usize, host: usize },
    #[error("budget of {0} exceeded")]
    Budget(u64),
    #[error("vertices {0} and {1} are not in the same part")]
    NotSamePart(u32, u32),
    #[error("unsupported mode: {0}")]
    ModeUnsupported(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("construction metadata does not match the host: {0}")]
    MetaMismatch(String),
    #[error("density of an empty subset tuple is undefined")]
    EmptySet,
    #[error("coloring table of {bits} bits exceeds budget of {budget} bits")]
    ColoringTooLarge { bits: u128, budget: u128 },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("invalid probability {0}")]
    BadProbability(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("format: {0}")]
    Format(String),
}
