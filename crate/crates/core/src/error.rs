use std::fmt;

use thiserror::Error;

/// Failure of a parse, with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parse error at byte {}: expected {}, found {}",
            self.offset,
            self.expected.join(" | "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("pole in {op} at x = {at}")]
    Pole { op: &'static str, at: f64 },

    #[error("overflow in {op}: exponent argument {arg} is not representable")]
    Overflow { op: &'static str, arg: f64 },

    #[error("function `{0}` has no ordinary derivative attached")]
    MissingDerivative(String),

    #[error("integration range [{lo}, {hi}] crosses the singularity at {pole}")]
    Singularity { lo: f64, hi: f64, pole: f64 },

    #[error("degenerate secant through x = {x_i} and x = {x_j}")]
    DegenerateSecant { x_i: f64, x_j: f64 },

    #[error("inverse mismatch: F_inv(F({x0})) = {roundtrip}")]
    InverseMismatch { x0: f64, roundtrip: f64 },

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, QError>;
