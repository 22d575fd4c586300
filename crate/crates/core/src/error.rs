use thiserror::Error;

/// Errors raised by the elastic learning primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time series must contain at least one sample")]
    EmptySeries,

    #[error("non-finite sample {value} at position {index}")]
    NonFiniteSample { index: usize, value: f64 },

    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    InvalidDims { rows: usize, cols: usize },

    #[error("oracle limit exceeded: {rows}+{cols} exceeds {limit}")]
    OracleLimit { rows: usize, cols: usize, limit: usize },

    #[error("band radius {band} admits no warping path in a {rows}x{cols} grid")]
    InfeasibleBand { band: usize, rows: usize, cols: usize },

    #[error("series of length {len} does not fit a matrix with {rows} rows")]
    SeriesTooLong { len: usize, rows: usize },

    #[error("warping path is not valid for a {rows}x{cols} grid")]
    InvalidPath { rows: usize, cols: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid label {0}; expected +1 or -1")]
    InvalidLabel(f64),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weights diverged at epoch {epoch}: norm {norm} exceeds radius {radius}")]
    Diverged { epoch: usize, norm: f64, radius: f64 },

    #[error("active warping path changes under perturbation of {entry}")]
    NonUniqueActivePath { entry: String },

    #[error("loss is not differentiable at the check point ({0})")]
    NonSmoothPoint(String),

    #[error("model container: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
