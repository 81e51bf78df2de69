//! Exact dense linear algebra over GF(p) and GF(p^e).

mod field;
mod matrix;
mod partition;
mod reducer;

pub use field::{find_irreducible, is_irreducible, is_prime, FieldElem, FiniteField};
pub use matrix::{char_matrix, extend_scalars, fmat, partition_matrix, rank_at_least, Axis, GFMatrix};
pub use partition::LabelledPartition;

pub(crate) use matrix::eliminate;
pub(crate) use reducer::RowReducer;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("bad modulus: {0}")]
    BadModulus(String),
    #[error("element {0} out of range for a field of order {1}")]
    BadElement(u32, u32),
    #[error("cannot parse field element `{0}`")]
    BadElementText(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("tuple of length {found} where {expected} was expected")]
    TupleLength { expected: usize, found: usize },
    #[error("block {0} has no label")]
    MissingLabel(usize),
    #[error("expected {expected} sets, got {found}")]
    WrongListLength { expected: usize, found: usize },
    #[error("not a partition: {0}")]
    NotPartition(String),
    #[error("fields differ: {0} vs {1}")]
    FieldMismatch(String, String),
    #[error("operation requires a prime field, got {0}")]
    NeedsPrimeField(String),
}
