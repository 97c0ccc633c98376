//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("invalid interval [{a}, {b}]: {reason}")]
    Interval { a: f64, b: f64, reason: String },

    #[error("domain mismatch: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integration failure at x = {x}: {reason}")]
    Integration { x: f64, reason: String },

    #[error("path too short: needs [0, {needed}], has [0, {available}]")]
    PathTooShort { needed: f64, available: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
