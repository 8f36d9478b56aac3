use thiserror::Error;

use crate::spec::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid walk spec: {0}")]
    InvalidSpec(String),

    #[error("ellipticity violated at x = {x}: p_x = {p} is outside [{eps}, {upper}]", upper = 1.0 - .eps)]
    Ellipticity { x: u64, p: f64, eps: f64 },

    #[error("height {x} exceeds the representation limit {limit}")]
    HeightLimit { x: u64, limit: u64 },

    #[error("{quantity} overflows binary64 at x = {x}; use the log-space accessors")]
    Overflow { quantity: &'static str, x: usize },

    #[error("index {index} is outside the tabulated range 0..={max}")]
    OutOfRange { index: u64, max: u64 },

    #[error("resource limit: {what} needs {cells} cells, limit is {limit}")]
    ResourceLimit { what: String, cells: u64, limit: u64 },

    #[error("parity: {0}")]
    Parity(String),

    #[error("{formula} is not available in the {regime} regime")]
    Regime { formula: &'static str, regime: Regime },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("drift sign violation: {0}")]
    DriftSign(String),

    #[error("coupling configuration: {0}")]
    Coupling(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
