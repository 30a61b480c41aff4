//! Shared error type for all solvers and bound evaluators.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FblscError {
    #[error("support violation: p({symbol}) > 0 but q({symbol}) = 0")]
    SupportViolation { symbol: String },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("infeasible distortion level D = {d} (feasible range starts at {d_min})")]
    InfeasibleDistortion { d: f64, d_min: f64 },

    #[error("infeasible rate constraint R1 = {r1} < R(P,D1) = {required}")]
    InfeasibleRate { r1: f64, required: f64 },

    #[error("solver failed to converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("computation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("search budget exceeded: {0}")]
    SearchBudgetExceeded(String),

    #[error("region case mismatch: {0}")]
    CaseMismatch(String),

    #[error("moment order violation: zeta = {zeta} < sigma^4 = {sigma4}")]
    MomentOrderViolation { zeta: f64, sigma4: f64 },

    #[error("degenerate channel: capacity is zero")]
    DegenerateChannel,

    #[error("parameters outside validity region: violated {violated}")]
    OutOfValidityRegion { violated: String },
}

pub type Result<T> = std::result::Result<T, FblscError>;
