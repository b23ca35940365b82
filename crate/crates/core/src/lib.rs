//! Exact counting of zero-one vector pairs by integer inner product.
//!
//! The counting pipeline aggregates pair counts by prime residue, then
//! reconstructs the full histogram from the aggregates by inverting the
//! nonzero residue aggregation matrix. Residue counts themselves are
//! obtained with the polynomial method: an amplified residue indicator
//! in split-monomial form turns the count into a blocked matrix product
//! modulo a prime power.
//!
//! On top of the counter sit zero-one permanent computations (Ryser plus
//! two reductions that recover the permanent modulo a prime from pair
//! counts) and two applications: SYM∘AND satisfying-assignment counting
//! and binary linear code weight distributions.

pub mod apps;
mod arith;
pub mod cli;
pub mod engine;
mod par;
pub mod permanent;
pub mod polybuild;
pub mod reconstruct;

use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("length {got} does not match expected {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("block constraint violated: g^2 = {g_squared} exceeds p^h - 1 = {limit}")]
    BlockConstraint { g_squared: u128, limit: u128 },
    #[error("modulus {base}^{exponent} does not fit in 63 bits")]
    ModulusTooLarge { base: u64, exponent: u32 },
    #[error("dimension {0} exceeds the supported limit {1}")]
    DimensionTooLarge(usize, usize),
    #[error("aggregate vector is not consistent with nonnegative integer counts")]
    InvalidAggregate,
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl fmt::Display) -> Self {
        Error::Invalid(msg.to_string())
    }

    pub fn inconsistent(msg: impl fmt::Display) -> Self {
        Error::Inconsistent(msg.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
