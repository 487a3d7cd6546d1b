use thiserror::Error;

/// Errors raised by the library. Every variant is a precondition or
/// consistency violation; numerical routines themselves do not fail.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("permutation family is empty")]
    EmptyFamily,

    #[error("{0} is not prime")]
    NotPrime(usize),

    #[error("1/epsilon = {0} is not an integer")]
    EpsilonNotReciprocalInteger(f64),

    #[error("n = {n} is not a multiple of 1/epsilon = {buckets}")]
    NotBucketMultiple { n: usize, buckets: usize },

    #[error("epsilon*n = {eps_n} is below 2/delta = {bound}")]
    BucketTooSmall { eps_n: f64, bound: f64 },

    #[error("parameter {name} = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("family does not fit mode {mode}: {reason}")]
    FamilyModeMismatch { mode: &'static str, reason: String },

    #[error("empty threshold grid")]
    EmptyGrid,

    #[error("linear program: {0}")]
    Lp(String),
}

pub type Result<T> = std::result::Result<T, Error>;
