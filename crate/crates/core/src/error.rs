use thiserror::Error;

use crate::signal::TrendRow;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("requested {requested} nodes with positive degree, only {available} available")]
    InsufficientNodes { requested: usize, available: usize },

    #[error("power-law fit undefined: {0}")]
    FitUndefined(String),

    #[error("index history too short: step {t} needs {needed} past values, have {available}")]
    HistoryTooShort {
        t: usize,
        needed: usize,
        available: usize,
    },

    #[error("probability table has no entry for row {0:?}")]
    TableMiss(TrendRow),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
