use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("direction is not a unit vector: |omega| = {0}")]
    NonUnitDirection(f64),
    #[error("point lies at the origin")]
    OriginPoint,
    #[error("grid has {cells} cells, at least {min} required")]
    GridTooSmall { cells: usize, min: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("node index {index} out of range for {cells} cells")]
    NodeOutOfRange { index: usize, cells: usize },
    #[error("derivative order {0} not supported (expected 1 or 2)")]
    BadOrder(usize),
    #[error("profiles live on different grids")]
    GridMismatch,
    #[error("segment has {len} samples, at least {min} required")]
    SegmentTooShort { len: usize, min: usize },
    #[error("segment samples are not uniformly spaced in time")]
    NonUniformSegment,
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("malformed tensor text: {0}")]
    TensorFormat(String),
    #[error("unknown initial-data family `{0}`")]
    UnknownFamily(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("perturbation tensor rejected: {0}")]
    Perturbation(String),
    #[error("multiplier rejected: {0}")]
    Multiplier(String),
    #[error("inequality violated: right-hand side vanishes while left-hand side is {lhs}")]
    InequalityViolation { lhs: f64 },
    #[error("non-finite state at t = {0}")]
    NonFinite(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
