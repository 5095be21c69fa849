//! Error type shared by every module in the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Text input (matrix file or trapping-set database) is malformed.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A vector has the wrong length for the matrix or transform it is used with.
    #[error("vector length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    /// A projection was requested with a target circulant that does not divide
    /// the source circulant.
    #[error("target circulant {z_star} does not divide circulant {z}")]
    NotADivisor { z: usize, z_star: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Exhaustive search refused: the number of candidate supports exceeds the
    /// built-in work cap. Codes with n*z <= 24 always fit.
    #[error(
        "exhaustive search too large: {cost} candidate supports (n*z = {nz}, w_max = {w_max}) \
         exceed the cap of {cap}; n*z <= 24 is always accepted"
    )]
    ExhaustiveTooLarge {
        nz: usize,
        w_max: usize,
        cost: u128,
        cap: u128,
    },

    /// A database was paired with a matrix it was not built from.
    #[error("digest mismatch: expected {expected}, got {got}")]
    DigestMismatch { expected: String, got: String },

    /// An importance-sampling weight overflowed or vanished despite the
    /// normalization shift.
    #[error("non-finite importance weight at sample {sample}")]
    NonFiniteWeight { sample: usize },

    #[error("non-finite input value at index {index}")]
    NonFiniteInput { index: usize },
}
