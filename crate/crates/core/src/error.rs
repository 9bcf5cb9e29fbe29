use thiserror::Error;

/// Errors produced by the probability engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("operator is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("operator is not a contraction (norm {norm:.12})")]
    NotContraction { norm: f64 },
    #[error("numerical routine failed to converge: {0}")]
    NoConvergence(&'static str),
    #[error("invalid matrix data: {0}")]
    InvalidData(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("weights must be non-negative and sum to 1 (sum = {sum})")]
    BadWeights { sum: f64 },
    #[error("times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("expected {expected} time points, found {found}")]
    TimeCount { expected: usize, found: usize },
    #[error("sequence of length {len} exceeds the enumeration cap {cap}")]
    TooLong { len: usize, cap: usize },
    #[error("events are not mutually orthogonal")]
    NotOrthogonal,
    #[error("moment order {0} is out of range")]
    BadOrder(usize),
    #[error("operation requires a state; no-state mode is not supported here")]
    NoStateUnsupported,
    #[error("conditioning event is zero")]
    ZeroConditioningEvent,
    #[error("state is not entangled with respect to the bipartition")]
    NotEntangled,
    #[error("partial probabilities increased at step {step}: {previous} -> {next}")]
    MonotonicityViolated { step: usize, previous: f64, next: f64 },
    #[error("sampling requires unitary evolution")]
    NonUnitaryEvolution,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
