use num_complex::Complex64;
use thiserror::Error;

use crate::methods::Operator;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A stability function was evaluated at (or numerically on top of) a pole.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("pole of the stability function at z = {z}{}", location(*.stage, *.operator))]
pub struct PoleError {
    pub z: Complex64,
    /// 1-based splitting stage, when the pole came from an FSRK factor.
    pub stage: Option<usize>,
    pub operator: Option<Operator>,
}

fn location(stage: Option<usize>, operator: Option<Operator>) -> String {
    match (stage, operator) {
        (Some(k), Some(op)) => format!(" (stage {k}, operator {})", op.number()),
        _ => String::new(),
    }
}

/// A diagonally implicit stage equation could not be solved.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("Newton iteration failed in RK stage {stage} after {iterations} iterations (residual {residual:e})")]
pub struct StepFailure {
    /// 1-based Runge–Kutta stage.
    pub stage: usize,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Pole(#[from] PoleError),

    #[error("sub-integration failed at splitting stage {stage}, operator {}: {source}", .operator.number())]
    SubIntegration {
        stage: usize,
        operator: Operator,
        #[source]
        source: StepFailure,
    },

    #[error(transparent)]
    Step(#[from] StepFailure),

    #[error("integration became unstable at t = {time}")]
    Instability { time: f64 },

    #[error("no feasible candidate in {starts} starts (best order residual {best_residual:e}, best box violation {best_violation:e})")]
    SearchFailure {
        starts: usize,
        best_residual: f64,
        best_violation: f64,
    },

    #[error("eigenvalue estimate did not converge (relative residual {residual:e})")]
    Estimation { residual: f64 },

    #[error("step-size bracket is invalid: {0}")]
    Bracket(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
