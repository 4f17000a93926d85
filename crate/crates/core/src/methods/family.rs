//! Closed-form one-parameter families of three-stage third-order methods.

use std::fmt;
use std::str::FromStr;

use super::{order_condition_residuals_with_tol, SplittingMethod};
use crate::error::{Error, Result};

/// Left end of the negative real-valued range: `theta < FAMILY_LOWER_BOUND`.
pub const FAMILY_LOWER_BOUND: f64 = -1.217077796;

const EXCLUDED: [(f64, &str); 3] = [(0.25, "1/4"), (1.0 / 3.0, "1/3"), (1.0, "1")];
const FAMILY_TOL: f64 = 1e-10;

/// Sign in front of the square root in the `alpha_2^[2]` formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyBranch {
    Plus,
    Minus,
}

impl FamilyBranch {
    fn sign(self) -> f64 {
        match self {
            FamilyBranch::Plus => 1.0,
            FamilyBranch::Minus => -1.0,
        }
    }
}

impl fmt::Display for FamilyBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyBranch::Plus => "plus",
            FamilyBranch::Minus => "minus",
        })
    }
}

impl FromStr for FamilyBranch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(FamilyBranch::Plus),
            "minus" | "-" => Ok(FamilyBranch::Minus),
            _ => Err(Error::input(format!("branch must be plus or minus, got {s:?}"))),
        }
    }
}

fn discriminant(t: f64) -> f64 {
    (((144.0 * t + 72.0) * t - 99.0) * t + 30.0) * t - 3.0
}

/// Three-stage third-order method parameterized by `theta = alpha_3^[2]`.
pub fn three_stage_family(theta: f64, branch: FamilyBranch) -> Result<SplittingMethod> {
    if !theta.is_finite() {
        return Err(Error::domain(format!("theta must be finite, got {theta}")));
    }
    for (bad, label) in EXCLUDED {
        if (theta - bad).abs() <= 1e-14 * bad.abs().max(1.0) {
            return Err(Error::domain(format!("theta = {label} is excluded from the family")));
        }
    }
    if !(theta > 0.25 || theta < FAMILY_LOWER_BOUND) {
        return Err(Error::domain(format!(
            "theta = {theta} violates the real-valued range theta > 1/4 or theta < {FAMILY_LOWER_BOUND}"
        )));
    }
    let disc = discriminant(theta);
    if disc < 0.0 {
        return Err(Error::domain(format!(
            "theta = {theta} gives a negative discriminant 144t^4+72t^3-99t^2+30t-3 = {disc:e}"
        )));
    }

    let a32 = theta;
    let a22 = (1.0 - theta) / 2.0 + branch.sign() * disc.sqrt() / (24.0 * theta - 6.0);
    let a12 = 1.0 - a22 - a32;
    if a22 == 0.0 || a12 == 0.0 {
        return Err(Error::domain(format!(
            "theta = {theta} ({branch} branch) makes alpha_1^[2] or alpha_2^[2] vanish"
        )));
    }
    let a31 = -(3.0 * a22 + 3.0 * a32 - 1.0) / (6.0 * a22 * (a32 - 1.0));
    let a21 = (2.0 * a31 * a32 - 2.0 * a31 + 1.0) / (2.0 * a12);
    let a11 = 1.0 - a21 - a31;

    let rows = vec![[a11, a12], [a21, a22], [a31, a32]];
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::domain(format!("theta = {theta} yields non-finite coefficients")));
    }
    let m = SplittingMethod::new(format!("family3-{branch}({theta})"), rows, 0)?;
    let report = order_condition_residuals_with_tol(&m, 3, FAMILY_TOL)?;
    if report.satisfied_order < 3 {
        return Err(Error::domain(format!(
            "theta = {theta} is too close to a singular point: order residual {:e}",
            report.max_abs_through(3)
        )));
    }
    Ok(m.with_claimed_order(3))
}
