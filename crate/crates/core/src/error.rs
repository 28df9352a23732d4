use thiserror::Error;

/// Errors raised while building or evaluating models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("variable {index} has lower bound {lower} above upper bound {upper}")]
    InfeasibleBounds { index: usize, lower: f64, upper: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("model has no rows or no columns after conversion")]
    EmptyModel,
    #[error("row {0} of the constraint matrix is empty")]
    ZeroRow(usize),
    #[error("column {0} of the constraint matrix is empty")]
    ZeroColumn(usize),
    #[error("constraint matrix is zero")]
    ZeroMatrix,
}

/// MPS / solution-file parse failure, with a 1-based line number.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), LpError> {
    if expected == got {
        Ok(())
    } else {
        Err(LpError::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
