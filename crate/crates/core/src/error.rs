use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape {shape:?} holds {expected} values, got {got}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },

    #[error("axis {axis} out of range for a rank-{rank} tensor")]
    AxisOutOfRange { axis: usize, rank: usize },

    #[error("extent mismatch when pairing axis {axis_a} (extent {extent_a}) with axis {axis_b} (extent {extent_b})")]
    ExtentMismatch {
        axis_a: usize,
        extent_a: usize,
        axis_b: usize,
        extent_b: usize,
    },

    #[error("invalid axis partition: {0}")]
    InvalidSplit(String),

    #[error("non-finite value in input to {0}")]
    NonFinite(&'static str),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("site {index} out of range for a chain of {len} sites")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("expected a product (bond dimension 1) state")]
    NotProductState,

    #[error("invalid filter configuration: {0}")]
    InvalidFilterConfig(String),

    #[error("index {index} out of range for series order {order}")]
    OrderOutOfRange { index: usize, order: usize },

    #[error("truncation budget exceeded at order {order}: cumulative discarded weight {weight:e} > {threshold:e}")]
    TruncationBudgetExceeded {
        order: usize,
        weight: f64,
        threshold: f64,
    },

    #[error("vanishing trace: |<1|rho>| = {trace:e} with |rho| = {norm:e}")]
    DegenerateNormalization { trace: f64, norm: f64 },

    #[error("operator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("{n} sites exceeds the dense limit of {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("target energy {target} outside the attainable canonical range ({min}, {max})")]
    EnergyOutOfRange { target: f64, min: f64, max: f64 },

    #[error("thermal energy is not monotone in beta near beta = {0}")]
    NonMonotoneEnergy(f64),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("fit: {0}")]
    Fit(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
