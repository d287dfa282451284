use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PieError {
    #[error("dataset needs at least 2 rows and 1 column, got {rows}x{cols}")]
    TooSmall { rows: usize, cols: usize },

    #[error("non-finite covariate at row {row}, column {col}")]
    NonFiniteCovariate { row: usize, col: usize },

    #[error("non-finite response at row {row}")]
    NonFiniteResponse { row: usize },

    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no admissible tuning parameter on the path; refit was rank deficient or saturated everywhere, try a denser grid or a larger ratio")]
    NoAdmissibleLambda,

    #[error("refit design is rank deficient or has {df} columns for {n} observations")]
    InadmissibleRefit { df: usize, n: usize },

    #[error("true interaction matrix has no nonzero entries")]
    EmptyTruth,

    #[error("dimension {p} exceeds the limit of {limit} for {what}")]
    TooLarge { what: &'static str, p: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, PieError>;
