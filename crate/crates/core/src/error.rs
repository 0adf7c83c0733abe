use std::io;

use thiserror::Error;

/// Errors produced anywhere in the suite.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {rows}x{cols}: {reason}")]
    Dimension {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("data length {len} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("mask value {value} at index {index} is not 0 or 1")]
    MaskValue { index: usize, value: f64 },

    #[error("non-finite value at ({row}, {col}) after iteration {iteration}")]
    NonFinite {
        iteration: usize,
        row: usize,
        col: usize,
    },

    #[error("multigrid diverged at cycle {cycle}: residual {residual:e} exceeds 10x the minimum {minimum:e}")]
    Diverged {
        cycle: usize,
        residual: f64,
        minimum: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("energy window [{t0_ms}, {t1_ms}] ms is not covered by the power trace")]
    NoCoverage { t0_ms: f64, t1_ms: f64 },

    #[error("invalid power trace: {0}")]
    Trace(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate record key {0}")]
    DuplicateKey(String),

    #[error("baseline missing for: {0}")]
    MissingBaseline(String),

    #[error("cannot compare metric {left} against {right}")]
    MixedMetrics { left: String, right: String },

    #[error("unknown format {0:?}")]
    UnknownFormat(String),

    #[error("fixture {name}: {message}")]
    Fixture { name: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
