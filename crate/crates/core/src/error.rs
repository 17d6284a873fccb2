use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("run interrupted at step {step}: no-jump probability {prob:.3e}")]
    Interrupted { step: usize, prob: f64 },
    #[error("integrator step too large: {0}")]
    StepTooLarge(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error("infeasible synthesis target: {0}")]
    Infeasible(String),
    #[error("degenerate trajectory: {0}")]
    Degenerate(String),
    #[error("trajectory step {step:.3} exceeds limit {limit:.3}")]
    StepLimit { step: f64, limit: f64 },
    #[error("no recurrence found in window")]
    NoRecurrence,
}

pub type Result<T> = std::result::Result<T, Error>;
