use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("interval endpoints out of order: a = {a} > b = {b}")]
    ArgumentOrder { a: f64, b: f64 },

    #[error("width must be positive, got {0}")]
    NonPositiveWidth(f64),

    #[error("interiors empty at this scale: {0}")]
    InvalidScale(String),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("matrix order {n} exceeds dense cap {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("pivot breakdown at shift {shift} persisted after {retries} jittered retries")]
    TieBreak { shift: f64, retries: u32 },

    #[error("linear solve did not converge: residual {residual:e}")]
    SolverNonConvergence { residual: f64 },

    #[error("site {0} is not in the interior of the block")]
    NotInterior(usize),

    #[error("microscopic window width {0:e} underflows")]
    WindowUnderflow(f64),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}
