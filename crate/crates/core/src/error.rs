use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("digits up to precision {precision} are not determined by any enclosure up to the precision cap")]
    UndeterminedBits { precision: u64 },

    #[error("degenerate interval: {0}")]
    Degenerate(String),

    #[error("precision exhausted after {bits} bits: {context}")]
    PrecisionExhausted { bits: u64, context: String },

    #[error("no room to code payload: target length {target} must exceed {prefix} + 5")]
    NoRoom { prefix: u64, target: u64 },

    #[error("schedule overflow: {0}")]
    ScheduleOverflow(String),

    #[error("block overflow at stage {stage}, block {block}: extension reached {rho_len} bits, budget {budget}")]
    BlockOverflow { stage: u64, block: u64, rho_len: u64, budget: u64 },

    #[error("decoded blocks disagree with the target sequence at index {index}")]
    DecodeMismatch { index: u64 },

    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
