use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field of size {q} exceeds the table limit {limit}")]
    TableLimit { q: u128, limit: u64 },
    #[error("modulus is not an irreducible monic polynomial of degree {degree} over F_{p}")]
    ReducibleModulus { p: u64, degree: u32 },
    #[error("element index {index} out of range for a field of size {q}")]
    BadElement { index: u64, q: u64 },
    #[error("character order {d} does not divide q-1 = {q_minus_one}")]
    CharacterOrder { d: u64, q_minus_one: u64 },
    #[error("character index {j} must be smaller than its order {d}")]
    CharacterIndex { j: u64, d: u64 },
    #[error("enumeration budget exceeded: {needed} operations > {budget}")]
    Budget { needed: f64, budget: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("offset set is not compatible with the family (a sum of at most {max_terms} offsets vanishes)")]
    Incompatible { max_terms: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
