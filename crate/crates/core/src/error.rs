use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("mollifier construction failed: moment system singular at moment {moment} (pivot {pivot:e})")]
    SingularMoments { moment: usize, pivot: f64 },

    #[error("profile validation failed: {0}")]
    ProfileValidation(String),

    #[error("constraints not satisfiable by family: {detail} (residuals: {residuals:?})")]
    Infeasible { detail: String, residuals: Vec<f64> },

    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate:e}, error {error:e}")]
    Quadrature { a: f64, b: f64, estimate: f64, error: f64 },

    #[error("non-finite sample at x = {x}, eps = {eps}")]
    NonFinite { x: f64, eps: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("expression error: {0}")]
    Expression(String),

    #[error("no strong solution: {0}")]
    NoStrongSolution(String),

    #[error("statement vector rejected: {0}")]
    StatementVector(String),

    #[error("Newton iteration failed to close the jump conditions: {reason} (residual trace: {trace:?})")]
    NoClosure { reason: String, trace: Vec<f64> },

    #[error("scheme configuration: {0}")]
    Configuration(String),

    #[error("scheme assumption broken at t = {t}: {detail}")]
    SchemeAssumption { t: f64, detail: String },

    #[error("shock measurement failed: {0}")]
    Measurement(String),
}

pub type Result<T> = std::result::Result<T, Error>;
