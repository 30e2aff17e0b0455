use thiserror::Error;

/// Errors raised by the lattice, form, cyclotomic and action layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degenerate Gram matrix")]
    DegenerateGram,
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("not a glue vector")]
    NotGlueVector,
    #[error("twist factor must be nonzero")]
    ZeroTwist,
    #[error("unknown standard lattice `{0}`")]
    UnknownLattice(String),
    #[error("definite only; use stable_equivalence_check")]
    IndefiniteInput,
    #[error("group order {order} exceeds limit {limit}")]
    OrderLimitExceeded { order: u128, limit: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("pole: weight {weight} is divisible by the order {order}")]
    Pole { weight: i64, order: u32 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("matrix is not an isometry of the given Gram matrix")]
    NotAnIsometry,
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("invalid generators: {0}")]
    InvalidGenerators(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
