use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("p must be prime, got {0}")]
    NotPrime(u32),

    #[error("level must be at least 1")]
    ZeroLevel,

    #[error("p^l = {p}^{l} exceeds the supported grid size 2^31")]
    GridTooLarge { p: u32, l: u32 },

    #[error("cell index {index} out of range for a grid of {size} cells")]
    CellOutOfRange { index: usize, size: usize },

    #[error("ball level {level} out of range 0..={max}")]
    BallLevelOutOfRange { level: u32, max: u32 },

    #[error("kernel exponent alpha = 1 is singular")]
    SingularAlpha,

    #[error("norm value {0} outside (0, 1]")]
    NormOutOfRange(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("operator side {side} exceeds the dense-matrix cap {cap}")]
    OperatorTooLarge { side: usize, cap: usize },

    #[error("invalid adjacency: {0}")]
    InvalidAdjacency(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite state entry at cell {cell}")]
    NonFinite { cell: usize },

    #[error("numerical blow-up at t = {time}")]
    BlowUp { time: f64 },

    #[error("operator is not symmetric (defect {defect:e})")]
    NotSymmetric { defect: f64 },

    #[error("trajectory has no stored state at t = {0}")]
    MissingState(f64),

    #[error("activation is unbounded; the growth certificate is undefined")]
    UnboundedActivation,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
