use thiserror::Error;

use crate::channel::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock level {n} is outside a basis of dimension {dim}")]
    OutOfBasis { n: usize, dim: usize },

    #[error("basis dimension {dim} is not supported (must be between 1 and {max})")]
    Dimension { dim: usize, max: usize },

    #[error("truncated tail mass {tail:e} exceeds {tolerance:e}; need dim >= {required_dim}")]
    Truncation {
        tail: f64,
        tolerance: f64,
        required_dim: usize,
    },

    #[error("evolved state does not fit in {out_dim} levels (last population {tail:e}, trace defect {defect:e}); try out_dim >= {suggested_dim}")]
    TruncationOverflow {
        out_dim: usize,
        tail: f64,
        defect: f64,
        suggested_dim: usize,
    },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires the {expected} regime but parameters are {found}")]
    Regime { expected: &'static str, found: Regime },

    #[error("generating function diverges: lambda = {lambda} must be below {bound}")]
    Divergence { lambda: f64, bound: f64 },

    #[error("observable undefined: {0}")]
    UndefinedObservable(String),

    #[error("inconsistent input: {0}")]
    InconsistentInput(String),

    #[error("moment order {0} is not supported")]
    UnsupportedOrder(usize),

    #[error("state is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    Positivity { eigenvalue: f64 },

    #[error("integration needs {steps} steps but the budget is {max_steps}")]
    StepBudget { steps: usize, max_steps: usize },

    #[error("integrator did not converge after {halvings} halvings (last change {change:e})")]
    NoConvergence { halvings: usize, change: f64 },
}
