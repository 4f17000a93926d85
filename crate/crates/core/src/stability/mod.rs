//! Linear stability of FSRK methods.
//!
//! For `y' = lambda1 y + lambda2 y` one FSRK step multiplies `y` by
//! `R(z1, z2) = prod_k R_k1(alpha_k1 z1) R_k2(alpha_k2 z2)` with
//! `z_l = lambda_l dt`. With a diffusion operator D and a reaction operator R
//! whose dominant eigenvalues are in ratio `lambda_D / lambda_R`, the
//! two-variable function reduces to a function of `z = lambda_R dt`.

mod raster;
mod tableau;
mod xhat;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, PoleError, Result};
use crate::integrators::{PlanSpec, SubIntegratorPlan};
use crate::methods::{Operator, SplittingMethod};

pub use raster::{raster, RegionRaster, Window};
pub use tableau::{rk_stability, ButcherTableau, TableauKind};
pub use xhat::{find_xhat, find_xhat_with, practical_interval, ScanOptions, XHatResult, DEFAULT_SCAN_DEPTH};

/// Diffusion/reaction ratio `lambda_D / lambda_R` of the reference
/// reaction–diffusion benchmark.
pub const BENCHMARK_EIGEN_RATIO: f64 = 1.92 / 1260.0;

/// Which physical operator runs first in each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorOrdering {
    /// Diffusion first (operator 1 = diffusion).
    DR,
    /// Reaction first (operator 1 = reaction).
    RD,
}

impl OperatorOrdering {
    pub fn other(self) -> Self {
        match self {
            OperatorOrdering::DR => OperatorOrdering::RD,
            OperatorOrdering::RD => OperatorOrdering::DR,
        }
    }

    /// Split operator that carries the diffusion term.
    pub fn diffusion_operator(self) -> Operator {
        match self {
            OperatorOrdering::DR => Operator::First,
            OperatorOrdering::RD => Operator::Second,
        }
    }

    pub fn reaction_operator(self) -> Operator {
        self.diffusion_operator().other()
    }
}

impl fmt::Display for OperatorOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OperatorOrdering::DR => "DR",
            OperatorOrdering::RD => "RD",
        })
    }
}

impl FromStr for OperatorOrdering {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DR" => Ok(OperatorOrdering::DR),
            "RD" => Ok(OperatorOrdering::RD),
            _ => Err(Error::input(format!("ordering must be DR or RD, got {s:?}"))),
        }
    }
}

/// Everything needed to evaluate the single-variable stability function.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityContext {
    pub method: SplittingMethod,
    /// Tableaus per split operator (not per physical operator).
    pub plan: SubIntegratorPlan,
    pub ordering: OperatorOrdering,
    /// `lambda_D / lambda_R`.
    pub eigen_ratio: f64,
}

impl StabilityContext {
    pub fn new(
        method: SplittingMethod,
        plan: SubIntegratorPlan,
        ordering: OperatorOrdering,
        eigen_ratio: f64,
    ) -> Result<Self> {
        if !eigen_ratio.is_finite() {
            return Err(Error::input(format!("eigen ratio must be finite, got {eigen_ratio}")));
        }
        plan.validate_for(&method)?;
        Ok(StabilityContext {
            method,
            plan,
            ordering,
            eigen_ratio,
        })
    }

    /// Context whose operator plan is derived from a diffusion/reaction plan.
    pub fn from_spec(
        method: SplittingMethod,
        spec: &PlanSpec,
        ordering: OperatorOrdering,
        eigen_ratio: f64,
    ) -> Result<Self> {
        Self::new(method, spec.for_ordering(ordering), ordering, eigen_ratio)
    }

    /// Argument scales `(s1, s2)` with `z_l = s_l z`.
    pub fn scales(&self) -> [f64; 2] {
        match self.ordering {
            OperatorOrdering::DR => [self.eigen_ratio, 1.0],
            OperatorOrdering::RD => [1.0, self.eigen_ratio],
        }
    }

    /// Poles of the single-variable function on the real axis.
    pub fn poles(&self) -> Vec<f64> {
        let scales = self.scales();
        let mut out = Vec::new();
        for (k, op, alpha) in self.method.flows() {
            let tab = self.plan.resolve(k, op, alpha);
            let scale = scales[op.index()] * alpha;
            if scale != 0.0 {
                out.extend(tab.diagonal().map(|d| 1.0 / (scale * d)));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Fast real-axis evaluation; `None` at a pole.
    pub fn eval_real(&self, x: f64) -> Option<f64> {
        let scales = self.scales();
        let mut r = 1.0;
        for (k, op, alpha) in self.method.flows() {
            let tab = self.plan.resolve(k, op, alpha);
            r *= tab.stability_real(alpha * scales[op.index()] * x)?;
        }
        Some(r)
    }
}

/// Product of per-factor values with zero-coefficient factors skipped.
/// `factor(stage, op, w)` evaluates the sub-integration stability function at
/// the scaled argument `w = alpha * z_l`.
pub fn fsrk_stability_by<F>(
    method: &SplittingMethod,
    z1: Complex64,
    z2: Complex64,
    mut factor: F,
) -> std::result::Result<Complex64, PoleError>
where
    F: FnMut(usize, Operator, f64, Complex64) -> std::result::Result<Complex64, PoleError>,
{
    let mut r = Complex64::new(1.0, 0.0);
    for (k, op, alpha) in method.flows() {
        let z = if op == Operator::First { z1 } else { z2 };
        let w = z * alpha;
        r *= factor(k, op, alpha, w).map_err(|e| PoleError {
            z: e.z,
            stage: Some(k),
            operator: Some(op),
        })?;
    }
    Ok(r)
}

/// Two-variable FSRK stability function `R(z1, z2)`.
pub fn fsrk_stability(
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    z1: Complex64,
    z2: Complex64,
) -> std::result::Result<Complex64, PoleError> {
    fsrk_stability_by(method, z1, z2, |k, op, alpha, w| {
        plan.resolve(k, op, alpha).stability(w)
    })
}

/// `R_DR(z)` or `R_RD(z)` with `z = lambda_R dt`.
pub fn single_var_stability(
    ctx: &StabilityContext,
    z: Complex64,
) -> std::result::Result<Complex64, PoleError> {
    let [s1, s2] = ctx.scales();
    fsrk_stability(&ctx.method, &ctx.plan, z * s1, z * s2)
}
