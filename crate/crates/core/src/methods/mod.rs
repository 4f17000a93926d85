//! Splitting-method coefficients and their algebraic properties.

mod family;
pub(crate) mod io;
pub(crate) mod order;
mod registry;
mod two_stage;

use std::fmt;

use crate::error::{Error, Result};

pub use family::{three_stage_family, FamilyBranch, FAMILY_LOWER_BOUND};
pub use io::{parse_method, read_method, write_method, format_method};
pub use order::{
    lem3, lem3_unchecked, order_condition_residuals, order_condition_residuals_with_tol,
    third_order_residuals, LemReport, OrderConditionReport,
};
pub use registry::{lookup, registry, registry_names, AKS3_PRINTED};
pub use two_stage::{two_stage_residuals, two_stage_search, TwoStageSearch};

/// Consistency tolerance for claimed-order methods.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// One of the two split operators, in execution order within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    First,
    Second,
}

impl Operator {
    pub const BOTH: [Operator; 2] = [Operator::First, Operator::Second];

    /// Column index into the coefficient table.
    pub fn index(self) -> usize {
        match self {
            Operator::First => 0,
            Operator::Second => 1,
        }
    }

    /// 1-based label.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn other(self) -> Operator {
        match self {
            Operator::First => Operator::Second,
            Operator::Second => Operator::First,
        }
    }

    pub fn from_number(l: usize) -> Option<Operator> {
        match l {
            1 => Some(Operator::First),
            2 => Some(Operator::Second),
            _ => None,
        }
    }
}

/// How a method's coefficients were obtained; decides the default order tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    /// Exact rationals rounded once to binary.
    Rational,
    /// Decimal literals or numerically computed values.
    Decimal,
}

impl CoefficientKind {
    pub fn order_tolerance(self) -> f64 {
        match self {
            CoefficientKind::Rational => 1e-12,
            CoefficientKind::Decimal => 1e-10,
        }
    }
}

/// A 2-split, s-stage fractional-step method.
///
/// `alpha[k] = [alpha_k^[1], alpha_k^[2]]` with `k` 0-based here; public
/// accessors taking a stage number are 1-based like the usual notation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingMethod {
    name: String,
    alpha: Vec<[f64; 2]>,
    claimed_order: u32,
    kind: CoefficientKind,
}

impl SplittingMethod {
    pub fn new(name: impl Into<String>, alpha: Vec<[f64; 2]>, claimed_order: u32) -> Result<Self> {
        Self::with_kind(name, alpha, claimed_order, CoefficientKind::Decimal)
    }

    pub fn with_kind(
        name: impl Into<String>,
        alpha: Vec<[f64; 2]>,
        claimed_order: u32,
        kind: CoefficientKind,
    ) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::input(format!("method name {name:?} must be a non-empty identifier")));
        }
        if alpha.is_empty() {
            return Err(Error::input("a splitting method needs at least one stage"));
        }
        if alpha.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::input(format!("method {name}: coefficients must be finite")));
        }
        if claimed_order >= 1 {
            for l in 0..2 {
                let sum: f64 = alpha.iter().map(|row| row[l]).sum();
                if (sum - 1.0).abs() > CONSISTENCY_TOL {
                    return Err(Error::input(format!(
                        "method {name} claims order {claimed_order} but operator {} coefficients sum to {sum}",
                        l + 1
                    )));
                }
            }
        }
        Ok(SplittingMethod {
            name,
            alpha,
            claimed_order,
            kind,
        })
    }

    /// Builds a method from its two coefficient columns.
    pub fn from_columns(
        name: impl Into<String>,
        first: &[f64],
        second: &[f64],
        claimed_order: u32,
    ) -> Result<Self> {
        if first.len() != second.len() {
            return Err(Error::input(format!(
                "coefficient columns differ in length ({} vs {})",
                first.len(),
                second.len()
            )));
        }
        let alpha = first.iter().zip(second).map(|(&a, &b)| [a, b]).collect();
        Self::new(name, alpha, claimed_order)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> usize {
        self.alpha.len()
    }

    pub fn claimed_order(&self) -> u32 {
        self.claimed_order
    }

    pub fn kind(&self) -> CoefficientKind {
        self.kind
    }

    pub fn order_tolerance(&self) -> f64 {
        self.kind.order_tolerance()
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.alpha
    }

    /// `alpha_k^[l]` for a 1-based stage `k`.
    pub fn alpha(&self, k: usize, op: Operator) -> f64 {
        self.alpha[k - 1][op.index()]
    }

    pub fn column(&self, op: Operator) -> Vec<f64> {
        self.alpha.iter().map(|row| row[op.index()]).collect()
    }

    pub fn sub_integration_count(&self) -> usize {
        self.alpha.iter().flatten().filter(|&&a| a != 0.0).count()
    }

    /// Nonzero sub-flows in execution order as `(stage (1-based), operator, alpha)`.
    pub fn flows(&self) -> impl Iterator<Item = (usize, Operator, f64)> + '_ {
        self.alpha.iter().enumerate().flat_map(|(k, row)| {
            Operator::BOTH
                .into_iter()
                .map(move |op| (k + 1, op, row[op.index()]))
                .filter(|&(_, _, a)| a != 0.0)
        })
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_claimed_order(mut self, order: u32) -> Self {
        self.claimed_order = order;
        self
    }

    /// The adjoint method: stage order reversed and operator columns swapped,
    /// `alpha*_k^[1] = alpha_{s-k+1}^[2]`, `alpha*_k^[2] = alpha_{s-k+1}^[1]`.
    pub fn adjoint(&self) -> SplittingMethod {
        let alpha = self.alpha.iter().rev().map(|&[a, b]| [b, a]).collect();
        let name = match self.name.strip_suffix('*') {
            Some(base) => base.to_string(),
            None => format!("{}*", self.name),
        };
        SplittingMethod {
            name,
            alpha,
            claimed_order: self.claimed_order,
            kind: self.kind,
        }
    }
}

/// Free-function form of [`SplittingMethod::adjoint`].
pub fn adjoint(m: &SplittingMethod) -> SplittingMethod {
    m.adjoint()
}

impl fmt::Display for SplittingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} (stages {}, sub-integrations {}, claimed order {})",
            self.name,
            self.stages(),
            self.sub_integration_count(),
            self.claimed_order
        )?;
        for (k, [a, b]) in self.alpha.iter().enumerate() {
            writeln!(f, "  {:>2}  {:>22.15}  {:>22.15}", k + 1, a, b)?;
        }
        Ok(())
    }
}
