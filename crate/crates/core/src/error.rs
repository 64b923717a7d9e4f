use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("inconsistent dimension at line {line}: expected {expected} columns, found {found}")]
    InconsistentDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("total weight is zero")]
    ZeroWeight,

    #[error("degenerate shape: {0}")]
    Degenerate(String),

    #[error("shape must be centered before {0}")]
    NotCentered(&'static str),

    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not orthogonal (max deviation {0:e})")]
    NotOrthogonal(f64),

    #[error("invalid contraction graph: {0}")]
    InvalidGraph(String),

    #[error("tensor of order {0} is not available")]
    MissingOrder(usize),

    #[error("catalog mismatch: {0}")]
    CatalogMismatch(String),

    #[error("normalization flags differ: {0}")]
    FlagMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
