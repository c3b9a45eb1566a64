use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix has no positive singular value")]
    NoPositiveSingularValue,
    #[error("column {index} is zero")]
    DegenerateColumn { index: usize },
    #[error("combinatorial budget exceeded: {required} evaluations needed, budget is {budget}")]
    CombinatorialBudgetExceeded { required: u128, budget: u128 },
    #[error("signal is zero")]
    DegenerateSignal,
    #[error("coefficients do not synthesize the signal (residual {residual:e})")]
    InconsistentRepresentation { residual: f64 },
    #[error("no support of size at most {s_max} fits the measurements")]
    NoSolution { s_max: usize },
    #[error("frame is not full spark")]
    NotFullSpark,
    #[error("exact mode unavailable: kernel dimension {nullity} exceeds limit {limit} and sampling found no counterexample")]
    ExactModeUnavailable { nullity: usize, limit: usize },
    #[error("premise failed: |u_T|_1 = {t_norm} is not greater than |u_Tc|_1 = {tc_norm}")]
    PremiseFailed { t_norm: f64, tc_norm: f64 },
    #[error("solver failed: {0}")]
    SolverFailure(String),
}

pub type Result<T> = core::result::Result<T, Error>;
