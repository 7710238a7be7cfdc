use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Bell order {requested} exceeds the configured maximum {max}")]
    OrderLimitExceeded { requested: usize, max: usize },
    #[error("integer coefficient overflow while expanding B_{order}")]
    CoefficientOverflow { order: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("insufficient arguments: need {needed}, got {given}")]
    InsufficientArguments { needed: usize, given: usize },
    #[error("insufficient jet order: need {needed}, have {available}")]
    InsufficientJetOrder { needed: usize, available: usize },
    #[error("jet basepoints differ ({left} vs {right})")]
    BasepointMismatch { left: f64, right: f64 },
    #[error("jet orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },
    #[error("cannot differentiate a jet of order zero")]
    ZeroOrderJet,
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("non-integer exponent at offset {offset}")]
    NonIntegerExponent { offset: usize },
    #[error("multi-index entry {k} exceeds the smoothness budget {budget}")]
    SmoothnessBudgetExceeded { k: usize, budget: usize },
    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),
    #[error("Wronskian vanishes at t = {t}: |{value:e}| <= {threshold:e}")]
    VanishingWronskian { t: f64, value: f64, threshold: f64 },
    #[error("no usable sample points ({skipped} skipped)")]
    NoUsablePoints { skipped: usize },
    #[error("no well-conditioned point subset (condition estimate {condition:e})")]
    IllConditionedSample { condition: f64 },
    #[error(
        "Phi functionals agree but no constant matrix fits (residual {residual:e} > {tolerance:e})"
    )]
    ValidationFailure { residual: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
