//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid is not aligned with the shifted dyadic lattice: {0}")]
    MisalignedGrid(String),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("non-monotone map: {0}")]
    NonMonotoneMap(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("grid spacing mismatch: {0}")]
    SpacingMismatch(String),

    #[error("unsupported dimension: {0}")]
    UnsupportedDim(String),

    #[error("conjugate vanishes at t = {0}")]
    ConjugateVanishes(f64),

    #[error("empty family: {0}")]
    EmptyFamily(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid config: {fields:?}")]
    Config { fields: Vec<String> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
