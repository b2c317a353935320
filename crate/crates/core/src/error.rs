use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh is not watertight: {unpaired_edges} unpaired edge(s)")]
    NonWatertight { unpaired_edges: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateMesh(String),

    #[error("grids do not share a frame")]
    FrameMismatch,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sampling method `{method}` is not available in {dim}D")]
    BadMethodForDimension { method: String, dim: usize },

    #[error("fiber is empty")]
    EmptyFiber,

    #[error("grid of {required_bytes} bytes exceeds the memory budget of {budget_bytes} bytes")]
    GridTooLarge { required_bytes: u64, budget_bytes: u64 },

    #[error("configuration lies outside the computed field and the tool may touch the near-net")]
    OutOfFieldBounds,

    #[error("tool tip is {distance} away from the tool surface (allowed {allowed})")]
    TipOffSurface { distance: f64, allowed: f64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
