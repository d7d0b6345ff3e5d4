use thiserror::Error;

/// Unified error type for the core library.
#[derive(Error, Debug)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field mismatch: expected {expected}, found {found}")]
    FieldMismatch { expected: String, found: String },
    #[error("variable catalogs differ")]
    CatalogMismatch,
    #[error("unknown variable: {0}")]
    UnknownVariable(String),
    #[error("initial form of the zero polynomial is undefined")]
    ZeroPolynomial,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot parse scalar {text:?}: {reason}")]
    ParseScalar { text: String, reason: String },
    #[error("cannot parse label {text:?}: {reason}")]
    ParseLabel { text: String, reason: String },
    #[error("duplicate label {0}")]
    DuplicateLabel(String),
    #[error("label {label} not found on axis {axis}")]
    UnknownLabel { axis: usize, label: String },
    #[error("axis must be 1, 2 or 3, got {0}")]
    AxisOutOfRange(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{0}")]
    SpanMembership(String),
    #[error("matrix is singular: {0}")]
    Singular(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("axis label {0} carries no block tag")]
    MissingBlockTag(String),
    #[error("enumeration of {what} needs {needed} items, over the budget of {budget}")]
    BudgetExceeded {
        what: String,
        needed: u128,
        budget: u128,
    },
    #[error("duplicate tensor entry at ({0}, {1}, {2})")]
    DuplicateEntry(String, String, String),
    #[error("linear system is infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
