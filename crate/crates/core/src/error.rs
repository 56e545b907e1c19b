use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported dimension {0}: only n = 1, 2, 3 are implemented")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid samples are not discretely convex: second difference {value:e} at node {node:?} (direction {direction:?})")]
    NotConvex {
        node: Vec<usize>,
        direction: Vec<i64>,
        value: f64,
    },

    #[error("query point {point:?} lies outside the grid box")]
    OutOfDomain { point: Vec<f64> },

    #[error(
        "weight support radius {radius} is not strictly inside the trimmed grid box on axis {axis}"
    )]
    Coverage { axis: usize, radius: f64 },

    #[error(
        "gradient range [{lo}, {hi}] on axis {axis} exceeds the requested dual box [{box_lo}, {box_hi}]"
    )]
    Clipping {
        axis: usize,
        lo: f64,
        hi: f64,
        box_lo: f64,
        box_hi: f64,
    },

    #[error("inadmissible density: {0}")]
    Inadmissible(String),

    #[error("operation not available for this representation: {0}")]
    UnsupportedRepresentation(String),

    #[error("degree index j = {j} out of range for dimension {dim}")]
    DegreeOutOfRange { j: usize, dim: usize },

    #[error("singular probe set: {0}")]
    SingularProbes(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}
