use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("sample has {distinct} distinct point(s); at least 2 are required")]
    DegenerateSample { distinct: usize },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("point {x} lies outside the support [{lo}, {hi})")]
    OutOfSupport { x: f64, lo: f64, hi: f64 },

    #[error("degenerate mixture: {0}")]
    DegenerateMixture(String),
}

pub type Result<T> = std::result::Result<T, Error>;
