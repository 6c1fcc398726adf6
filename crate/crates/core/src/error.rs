use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Gamma has a pole at {re}{im:+}i")]
    GammaPole { re: f64, im: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("coefficient bound too small: need a(n) up to n = {needed}, have {available}")]
    InsufficientCoefficients { needed: usize, available: usize },

    #[error("tail estimate {tail:e} exceeds tolerance {tol:e}")]
    ToleranceUnreachable { tail: f64, tol: f64 },

    #[error("unknown form label {0:?}")]
    UnknownForm(String),

    #[error("curve has singular reduction at good prime {0}")]
    SingularReduction(u64),

    #[error("series length {0} exceeds the exact integer range of the provider")]
    SeriesOverflow(usize),

    #[error("functional-equation sign is ambiguous: residual(+1) = {plus:e}, residual(-1) = {minus:e}")]
    AmbiguousSign { plus: f64, minus: f64 },

    #[error("cache file {path}: {reason}")]
    CacheFormat { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
