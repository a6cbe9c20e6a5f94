use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition {parts:?}: {reason}")]
    InvalidPartition { parts: Vec<u32>, reason: &'static str },

    #[error("partition {parts:?} has {rows} nonzero rows, more than the rank bound g = {g}")]
    RankBound { parts: Vec<u32>, rows: usize, g: usize },

    #[error("genus g = {g} is out of range: {reason}")]
    GenusOutOfRange { g: usize, reason: &'static str },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach error target {target:e} (best estimate {estimate:e} at {points} points per axis)")]
    QuadratureTarget {
        target: f64,
        estimate: f64,
        points: usize,
    },

    #[error("slice quadrature failed to converge at tau = {tau}: error estimate {estimate:e} exceeds tolerance {tol:e}")]
    NonConvergence { tau: f64, estimate: f64, tol: f64 },

    #[error("{q} is not an odd prime")]
    NotOddPrime { q: u64 },

    #[error("census work estimate {work} exceeds budget {budget}")]
    BudgetExceeded { work: u128, budget: u128 },

    #[error("{0} is not a negative discriminant (must be < 0 and congruent to 0 or 1 mod 4)")]
    NotDiscriminant(i64),

    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),

    #[error("fundamental discriminant {0} is outside the supported range (must be < -4)")]
    ExcludedDiscriminant(i64),

    #[error("precondition failed for (q = {q}, t = {t}): {reason}")]
    Inadmissible { q: u64, t: i64, reason: String },

    #[error("genus mismatch: histogram has g = {hist}, density has g = {density}")]
    GenusMismatch { hist: usize, density: usize },

    #[error("search budget exhausted: {0}")]
    SearchExhausted(String),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
