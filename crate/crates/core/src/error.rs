use thiserror::Error;

use crate::economy::ValidationReport;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomyError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid economy:\n{0}")]
    Invalid(ValidationReport),
}

impl EconomyError {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        EconomyError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DominanceError {
    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("agent {0} compared with itself")]
    SameAgent(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockingError {
    #[error("coalition must contain at least two agents")]
    Singleton,
    #[error("coalition member {0} is out of range")]
    OutOfRange(usize),
    #[error("coalition repeats agent {0}")]
    Duplicate(usize),
    #[error("bundle rows do not redistribute the coalition endowment: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Dominance(#[from] DominanceError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("constraint set is infeasible")]
    InfeasibleConstraints,
    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),
    #[error("economy is not an integral housing market: {0}")]
    NotIntegral(String),
    #[error(transparent)]
    Blocking(#[from] BlockingError),
    #[error(transparent)]
    Dominance(#[from] DominanceError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("script line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error("invalid utility profile: {0}")]
    Utility(String),
    #[error("price adjustment did not clear the market (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    #[error("rounding repair failed: {0}")]
    Repair(String),
    #[error("invalid relaxation schedule: {0}")]
    Schedule(String),
    #[error("no verified allocation within budget: {0}")]
    Verification(String),
}
