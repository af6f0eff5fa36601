//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small: {m} nodes, need at least 4")]
    GridTooSmall { m: usize },

    #[error("field length mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("non-finite value in {context} at node {node}")]
    NonFinite { context: &'static str, node: usize },

    #[error("degenerate geometry at node {node}: {quantity} = {value:.3e} under threshold {threshold:.3e}")]
    DegenerateGeometry {
        node: usize,
        quantity: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("singular linear system: pivot {pivot:.3e} at elimination step {step}")]
    SingularSystem { step: usize, pivot: f64 },

    #[error("linear solve residual {residual:.3e} exceeds contract bound {bound:.3e}")]
    ResidualContract { residual: f64, bound: f64 },

    #[error("matrix entry ({row}, {col}) outside system dimension {dim}")]
    EntryOutOfBounds { row: usize, col: usize, dim: usize },

    #[error(
        "Picard iteration did not converge in {max_iters} iterations \
         (last update {last_update:.3e}, tolerance {tol:.3e})"
    )]
    PicardDiverged {
        max_iters: usize,
        last_update: f64,
        tol: f64,
    },

    #[error("unsupported BDF order {k}; supported orders are 1 through 4")]
    UnsupportedOrder { k: usize },

    #[error("numeric precondition violated: {0}")]
    Precondition(String),

    #[error("unknown curve preset '{name}' (available: {available})")]
    UnknownPreset { name: String, available: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("failed to read curve file '{path}': {detail}")]
    CurveFile { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
