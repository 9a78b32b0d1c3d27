use thiserror::Error;

/// Errors produced by instance construction, parsing, solvers, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("degenerate generator configuration: {0}")]
    DegenerateConfig(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("partition violates the budget constraint")]
    InfeasiblePartition,

    #[error("illegal action: {0}")]
    IllegalAction(String),

    #[error("instance too large to enumerate: {states} states exceeds cap {cap}")]
    InstanceTooLarge { states: u128, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("gap undefined: algorithm average is zero")]
    GapUndefined,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
