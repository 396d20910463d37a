use thiserror::Error;

/// Errors raised by the library. Negative verdicts (a pair that does not
/// hold, an axiom that fails) are reported in return values, not here.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown filter id `{0}`")]
    UnknownFilter(String),

    #[error("parameter `{name}` = {value} out of range: {reason}")]
    ParamOutOfRange {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("expression mixes variables `alpha` and `lambda`")]
    MixedVariables,

    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("function `{0}` is not certified")]
    Uncertified(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("eigenvalue {lambda} outside the filter's admissible range (< {limit})")]
    LambdaRange { lambda: f64, limit: f64 },

    #[error("dimension {rows}x{cols} exceeds the cap of {cap}")]
    DimensionCap { rows: usize, cols: usize, cap: usize },

    #[error("Jacobi SVD did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("hypothesis violated at alpha={alpha:e}, lambda={lambda:e}: {what}")]
    Hypothesis {
        alpha: f64,
        lambda: f64,
        what: String,
    },

    #[error("bisection did not converge for lambda={0:e}")]
    Bisection(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
