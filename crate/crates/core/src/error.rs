//! Error types for each layer of the engine.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("variable index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("malformed rational literal {0:?}")]
    BadRational(String),
    #[error("component {component} is not of the form p + O(k): {reason}")]
    NotIdentityShape { component: usize, reason: String },
    #[error("malformed series data: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("metric entries must be +1 or -1, got {0}")]
    InvalidMetric(i32),
    #[error("realization entry {0} depends on k; entries must be functions of p only")]
    EntryDependsOnK(String),
    #[error("entry {0} is a truncated p-series but the realization has no p-degree cap")]
    NonPolynomialInput(String),
    #[error("entry {0} has a constant term; p-degree truncation would not be order-exact")]
    TruncationUnsafe(String),
    #[error("the two routes to phi disagree for component {0}")]
    InconsistentPhi(usize),
    #[error("flows have mismatched truncation orders {0} and {1}")]
    OrderMismatch(u32, u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} components, got {found}")]
    ComponentCount { expected: usize, found: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("operands live in different algebra signatures")]
    SignatureMismatch,
    #[error("exponent has a term of k-degree 0; the exponential series would not truncate")]
    NonTruncatingExponent,
    #[error("the reference BCH polynomial is only available up to k-order 3 (asked for {0})")]
    BchOrderTooHigh(u32),
    #[error("the oracle works with polynomial realizations only")]
    NotPolynomial,
    #[error("composition is defined for realizations with chi = 0")]
    NonzeroChi,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable p_{index} at byte {offset} is out of range for dimension {n}")]
    VariableOutOfRange { index: usize, n: usize, offset: usize },
    #[error("negative exponent at byte {offset}")]
    NegativeExponent { offset: usize },
    #[error("fractional exponent at byte {offset}")]
    FractionalExponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::VariableOutOfRange { offset, .. }
            | ParseError::NegativeExponent { offset }
            | ParseError::FractionalExponent { offset } => *offset,
        }
    }
}
