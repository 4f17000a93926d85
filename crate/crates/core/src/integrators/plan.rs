use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::methods::{Operator, SplittingMethod};
use crate::stability::{ButcherTableau, OperatorOrdering};

/// What to do with sub-integrations that have a negative coefficient.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NegativeStepPolicy {
    #[default]
    None,
    ReplaceWith(ButcherTableau),
}

/// Which tableau runs each sub-integration.
///
/// Resolution order: per-(stage, operator) override, then the negative-step
/// policy (when the coefficient is negative), then the operator default.
#[derive(Debug, Clone, PartialEq)]
pub struct SubIntegratorPlan {
    defaults: [ButcherTableau; 2],
    overrides: BTreeMap<(usize, Operator), ButcherTableau>,
    negative_step_policy: NegativeStepPolicy,
}

impl SubIntegratorPlan {
    pub fn new(first: ButcherTableau, second: ButcherTableau) -> Self {
        SubIntegratorPlan {
            defaults: [first, second],
            overrides: BTreeMap::new(),
            negative_step_policy: NegativeStepPolicy::None,
        }
    }

    /// Same tableau for both operators.
    pub fn uniform(tab: ButcherTableau) -> Self {
        Self::new(tab.clone(), tab)
    }

    pub fn with_override(mut self, stage: usize, op: Operator, tab: ButcherTableau) -> Self {
        self.overrides.insert((stage, op), tab);
        self
    }

    pub fn with_negative_step_policy(mut self, policy: NegativeStepPolicy) -> Self {
        self.negative_step_policy = policy;
        self
    }

    pub fn default_for(&self, op: Operator) -> &ButcherTableau {
        &self.defaults[op.index()]
    }

    pub fn overrides(&self) -> &BTreeMap<(usize, Operator), ButcherTableau> {
        &self.overrides
    }

    pub fn negative_step_policy(&self) -> &NegativeStepPolicy {
        &self.negative_step_policy
    }

    /// Tableau for the sub-integration of `op` in 1-based `stage` with coefficient `alpha`.
    pub fn resolve(&self, stage: usize, op: Operator, alpha: f64) -> &ButcherTableau {
        if let Some(t) = self.overrides.get(&(stage, op)) {
            return t;
        }
        if alpha < 0.0 {
            if let NegativeStepPolicy::ReplaceWith(t) = &self.negative_step_policy {
                return t;
            }
        }
        &self.defaults[op.index()]
    }

    /// The plan that, paired with the adjoint of an `stages`-stage method,
    /// assigns every factor the tableau it had under the original method:
    /// defaults swap and override `(k, l)` moves to `(s - k + 1, other l)`.
    pub fn mirrored(&self, stages: usize) -> SubIntegratorPlan {
        SubIntegratorPlan {
            defaults: [self.defaults[1].clone(), self.defaults[0].clone()],
            overrides: self
                .overrides
                .iter()
                .map(|(&(k, op), t)| ((stages + 1 - k, op.other()), t.clone()))
                .collect(),
            negative_step_policy: self.negative_step_policy.clone(),
        }
    }

    /// Checks that overrides refer to stages that exist in `method`.
    pub fn validate_for(&self, method: &SplittingMethod) -> Result<()> {
        for &(k, op) in self.overrides.keys() {
            if k == 0 || k > method.stages() {
                return Err(Error::input(format!(
                    "plan override for stage {k}, operator {} but {} has {} stages",
                    op.number(),
                    method.name(),
                    method.stages()
                )));
            }
        }
        Ok(())
    }
}

/// Plan in diffusion/reaction terms: `<diffusion>:<reaction>[+negfe]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanSpec {
    pub diffusion: ButcherTableau,
    pub reaction: ButcherTableau,
    /// Replace negative-coefficient sub-steps in both operators by forward Euler.
    pub negative_fe: bool,
}

impl PlanSpec {
    pub fn new(diffusion: ButcherTableau, reaction: ButcherTableau, negative_fe: bool) -> Self {
        PlanSpec {
            diffusion,
            reaction,
            negative_fe,
        }
    }

    /// SDIRK(2,3) on diffusion and RK3 on reaction.
    pub fn standard() -> Self {
        Self::new(ButcherTableau::sdirk23(), ButcherTableau::rk3(), false)
    }

    pub fn with_negative_fe(mut self, on: bool) -> Self {
        self.negative_fe = on;
        self
    }

    /// Operator plan: in DR ordering operator 1 is diffusion, in RD it is reaction.
    pub fn for_ordering(&self, ordering: OperatorOrdering) -> SubIntegratorPlan {
        let (first, second) = match ordering {
            OperatorOrdering::DR => (self.diffusion.clone(), self.reaction.clone()),
            OperatorOrdering::RD => (self.reaction.clone(), self.diffusion.clone()),
        };
        let plan = SubIntegratorPlan::new(first, second);
        if self.negative_fe {
            plan.with_negative_step_policy(NegativeStepPolicy::ReplaceWith(
                ButcherTableau::forward_euler(),
            ))
        } else {
            plan
        }
    }
}

impl FromStr for PlanSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, negfe) = match s.split_once('+') {
            Some((body, flag)) if flag.eq_ignore_ascii_case("negfe") => (body, true),
            Some((_, flag)) => {
                return Err(Error::input(format!("unknown plan flag {flag:?} (only +negfe)")))
            }
            None => (s, false),
        };
        let (d, r) = body.split_once(':').ok_or_else(|| {
            Error::input(format!("plan {s:?} must look like <diffusion>:<reaction>[+negfe]"))
        })?;
        Ok(PlanSpec::new(
            ButcherTableau::by_name(d)?,
            ButcherTableau::by_name(r)?,
            negfe,
        ))
    }
}

impl fmt::Display for PlanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.diffusion.name(), self.reaction.name())?;
        if self.negative_fe {
            f.write_str("+negfe")?;
        }
        Ok(())
    }
}
