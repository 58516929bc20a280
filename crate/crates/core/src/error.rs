use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid demand profile: {0}")]
    InvalidDemand(String),

    #[error("invalid supply: {0}")]
    InvalidSupply(String),

    #[error("alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),

    #[error("utility undefined at x = {x} for alpha = {alpha}")]
    Domain { x: f64, alpha: f64 },

    #[error("household {index}: utility undefined at x = {x} for alpha = {alpha}")]
    HouseholdDomain { index: usize, x: f64, alpha: f64 },

    #[error("allocation length {got} does not match {expected} households")]
    LengthMismatch { expected: usize, got: usize },

    #[error(
        "dual bisection did not converge after {iterations} iterations \
         (last lambda = {last_lambda:e}, residual = {residual:e})"
    )]
    NonConvergence {
        last_lambda: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("satisfaction ratio undefined: demand is {0}")]
    UndefinedRatio(f64),

    #[error("infeasible allocation: {0}")]
    Infeasible(String),
}
