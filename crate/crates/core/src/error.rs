use thiserror::Error;

use crate::solver::BlowUp;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: expected {expected} coefficients, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("input is not conjugate-symmetric (max defect {0:e})")]
    NotConjugateSymmetric(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("samples out of order: t = {next} does not follow t = {previous}")]
    Ordering { previous: f64, next: f64 },

    #[error("non-uniform sample spacing: {expected} then {found}")]
    NonUniformSpacing { expected: f64, found: f64 },

    #[error("average over an empty time interval")]
    EmptyAverage,

    #[error("horizon mismatch: aggregate at t = {aggregate}, requested t = {requested}")]
    HorizonMismatch { aggregate: f64, requested: f64 },

    #[error(transparent)]
    BlowUp(Box<BlowUp>),

    #[error("realization {index} failed: {source}")]
    Realization { index: usize, source: Box<Error> },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
