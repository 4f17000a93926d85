//! Runge–Kutta sub-steps, FSRK composition and fixed-step time marching.

mod fsrk;
mod plan;
mod rk;

use crate::linalg::BandMatrix;
use crate::methods::Operator;

pub use fsrk::{
    fsrk_step, fsrk_step_with, integrate, IntegrateOptions, IntegrationFailure, RunStats,
    StepRecord, Trajectory,
};
pub use plan::{NegativeStepPolicy, PlanSpec, SubIntegratorPlan};
pub use rk::{rk_step, RkStats, NEWTON_MAX_ITERS, NEWTON_RTOL};

/// Right-hand side `y' = f(t, y)` of a single operator.
pub trait VectorField {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// Analytic Jacobian, if available.
    fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<BandMatrix> {
        None
    }

    /// `(lower, upper)` bandwidth of the Jacobian, if banded.
    fn bandwidth(&self) -> Option<(usize, usize)> {
        None
    }

    /// Whether `f` is affine in `y` (constant Jacobian), allowing reuse of one
    /// factorization across Newton iterations and stages.
    fn is_linear(&self) -> bool {
        false
    }

    /// Exact flow over `h`; returns `false` if unavailable.
    fn exact_flow(&self, _t: f64, _y: &[f64], _h: f64, _out: &mut [f64]) -> bool {
        false
    }
}

/// A 2-additively split ODE `y' = F1(t, y) + F2(t, y)`.
pub trait SplitProblem {
    fn label(&self) -> &str;

    fn dim(&self) -> usize;

    fn initial_state(&self) -> Vec<f64>;

    fn eval(&self, op: Operator, t: f64, y: &[f64], out: &mut [f64]);

    fn jacobian(&self, _op: Operator, _t: f64, _y: &[f64]) -> Option<BandMatrix> {
        None
    }

    fn bandwidth(&self, _op: Operator) -> Option<(usize, usize)> {
        None
    }

    fn is_linear(&self, _op: Operator) -> bool {
        false
    }

    fn exact_flow(&self, _op: Operator, _t: f64, _y: &[f64], _h: f64, _out: &mut [f64]) -> bool {
        false
    }

    /// Closed-form solution of the full problem, if known.
    fn exact(&self, _t: f64) -> Option<Vec<f64>> {
        None
    }

    /// Full right-hand side `F1 + F2`.
    fn eval_full(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; y.len()];
        self.eval(Operator::First, t, y, out);
        self.eval(Operator::Second, t, y, &mut tmp);
        for (o, v) in out.iter_mut().zip(tmp) {
            *o += v;
        }
    }
}

/// One operator of a split problem viewed as a vector field.
pub struct OperatorField<'a, P: ?Sized> {
    pub problem: &'a P,
    pub op: Operator,
}

impl<'a, P: SplitProblem + ?Sized> OperatorField<'a, P> {
    pub fn new(problem: &'a P, op: Operator) -> Self {
        OperatorField { problem, op }
    }
}

impl<P: SplitProblem + ?Sized> VectorField for OperatorField<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        self.problem.eval(self.op, t, y, out)
    }

    fn jacobian(&self, t: f64, y: &[f64]) -> Option<BandMatrix> {
        self.problem.jacobian(self.op, t, y)
    }

    fn bandwidth(&self) -> Option<(usize, usize)> {
        self.problem.bandwidth(self.op)
    }

    fn is_linear(&self) -> bool {
        self.problem.is_linear(self.op)
    }

    fn exact_flow(&self, t: f64, y: &[f64], h: f64, out: &mut [f64]) -> bool {
        self.problem.exact_flow(self.op, t, y, h, out)
    }
}
