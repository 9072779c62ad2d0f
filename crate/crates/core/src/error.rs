use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("interface not facet-aligned: {segment}")]
    NotFacetAligned { segment: String },

    #[error("field spec does not cover cell {cell} at {center:?}")]
    Uncovered { cell: usize, center: Vec<f64> },

    #[error("field failed validation: {violations} incompatible facets")]
    Unvalidated { violations: usize },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside admissible range: {0}")]
    OutOfRange(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("crack candidate touches the Dirichlet frame: {0}")]
    CrackOutsideDomain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
