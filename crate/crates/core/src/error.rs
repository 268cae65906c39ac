use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PermError {
    #[error("p = {0} is outside the supported range 1..=8")]
    UnsupportedSize(usize),
    #[error("permutation index {index} out of range 1..={size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("{0:?} is not a bijection of 1..=p")]
    NotABijection(Vec<u8>),
    #[error("permutation sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space of {states} points exceeds the enumeration cap {cap}")]
    CapExceeded { states: f64, cap: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("series of length {len} is too short for {batches} batches")]
    SeriesTooShort { len: usize, batches: usize },
    #[error("conditioning event has zero estimated probability")]
    UndefinedConditional,
    #[error("series is constant; autocorrelation is undefined")]
    ConstantSeries,
    #[error("kernel is not reversible with respect to the given distribution (max asymmetry {0:e})")]
    NotReversible(f64),
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {err:e})")]
    Quadrature { tol: f64, err: f64 },
    #[error("observed information {0} is not positive; increase final chain length")]
    InformationNotPositive(f64),
    #[error("objective is constant in lambda (p = 1)")]
    DegenerateObjective,
    #[error("sandwich spectrum exceeds the DA spectrum by {0:e}")]
    DominanceViolation(f64),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
