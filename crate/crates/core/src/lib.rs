//! Fractional-step Runge–Kutta (FSRK) operator splitting for 2-split ODEs.
//!
//! A 2-split method with coefficients `alpha[k][l]` advances
//! `y' = F1(t, y) + F2(t, y)` by running, for every stage `k`, operator 1 over
//! `alpha[k][0] * dt` and then operator 2 over `alpha[k][1] * dt`, each
//! sub-flow starting from the result of the previous one. When each sub-flow
//! is realized by a Runge–Kutta step the result is an FSRK method.
//!
//! The crate is organised around five parts:
//!
//! - [`methods`]: coefficient tables, the built-in registry, order conditions
//!   up to fourth order, the third-order local error measure and adjoints.
//! - [`stability`]: Butcher tableaus, FSRK stability functions, the
//!   single-variable diffusion/reaction reductions, stability rasters and the
//!   right-most negative real intercept `x_hat` of `|R(z)| = 1`.
//! - [`integrators`]: Runge–Kutta steps (explicit and diagonally implicit),
//!   sub-integrator plans and fixed-step FSRK time marching.
//! - [`problems`]: linear oracle problems, a FitzHugh–Nagumo
//!   reaction–diffusion benchmark, eigenvalue estimates, the MRMS error and
//!   largest-stable-step searches.
//! - [`optimizer`]: multi-start searches over the third-order manifold that
//!   minimize the local error measure or `x_hat`.

pub mod error;
pub mod integrators;
pub mod linalg;
pub mod methods;
pub mod optimizer;
pub mod problems;
pub mod stability;

pub use error::{Error, PoleError, Result, StepFailure};
pub use integrators::{
    fsrk_step, integrate, rk_step, NegativeStepPolicy, PlanSpec, StepRecord, SubIntegratorPlan,
    Trajectory,
};
pub use methods::{
    adjoint, lem3, order_condition_residuals, registry, three_stage_family, FamilyBranch,
    LemReport, Operator, OrderConditionReport, SplittingMethod,
};
pub use stability::{
    find_xhat, fsrk_stability, practical_interval, raster, rk_stability, single_var_stability,
    ButcherTableau, OperatorOrdering, RegionRaster, StabilityContext, XHatResult,
};
