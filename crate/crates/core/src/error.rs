use thiserror::Error;

use crate::hierarchy::{MemoryLevel, TransferChannel};
use crate::variants::{Variant, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while reading a calibration file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: malformed number for key `{key}`: `{value}`")]
    BadNumber {
        line: usize,
        key: String,
        value: String,
    },
    #[error("line {line}: non-positive rate for key `{key}`: {value}")]
    NonPositiveRate {
        line: usize,
        key: String,
        value: f64,
    },
    #[error("line {line}: key `{key}` must be at least 1")]
    NonPositiveCount { line: usize, key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("no calibrated rate for channel {0}")]
    UnknownChannel(TransferChannel),
    #[error("chunk width must be at least 1")]
    ZeroChunk,
    #[error("invalid shape {m}x{n}x{k}: every dimension must be at least 1")]
    InvalidShape { m: usize, n: usize, k: usize },
    #[error("micro-kernel {first}x{second} is not a multiple of the vector width {width}")]
    NotVectorMultiple {
        first: usize,
        second: usize,
        width: usize,
    },
    #[error("register budget exceeded: {needed} > {available}")]
    RegisterBudget { needed: usize, available: usize },
    #[error("infeasible configuration at {level}: {reason}")]
    Infeasible { level: MemoryLevel, reason: String },
    #[error("invalid configuration: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("buffer {buffer} overflows {level}: {needed} bytes > {capacity} bytes")]
    CapacityOverflow {
        buffer: &'static str,
        level: MemoryLevel,
        needed: usize,
        capacity: usize,
    },
    #[error("off-level read of {buffer}: resident in {actual}, variant expects {expected}")]
    OffLevelRead {
        buffer: &'static str,
        expected: MemoryLevel,
        actual: MemoryLevel,
    },
    #[error("no feasible micro-kernel for {0}")]
    NoFeasibleKernel(Variant),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
