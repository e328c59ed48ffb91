use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for {len} {what}")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("operands must be distinct (got {0} twice)")]
    DuplicateOperand(usize),

    #[error("rows {0} and {1} anticommute; their product is not Hermitian")]
    AnticommutingRows(usize, usize),

    #[error("observable does not anticommute with any stabilizer generator")]
    NoAnticommutingStabilizer,

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("degenerate observable: the identity has no measurement update")]
    DegenerateObservable,

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("outcome {outcome:+} has probability {probability:e}")]
    ImpossibleOutcome { outcome: i8, probability: f64 },

    #[error("non-finite angle {0}")]
    NonFiniteAngle(f64),

    #[error("capacity exceeded: {what} supports at most {max} qubits, got {n}")]
    Capacity {
        what: &'static str,
        max: usize,
        n: usize,
    },

    #[error("invalid truncation policy: {0}")]
    InvalidPolicy(String),

    #[error(transparent)]
    Parse(#[from] crate::circuit::ParseError),

    #[error("internal consistency error: {0}")]
    Internal(String),
}
