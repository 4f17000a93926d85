//! Multi-start design of third-order splitting methods.
//!
//! The five conditions of orders 1..=3 are eliminated by solving for the last
//! five non-forced-zero coefficients (column-major) with Newton's method, so
//! each start is a Nelder–Mead descent over the remaining free coefficients.

mod manifold;
mod nelder_mead;
mod search;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrators::PlanSpec;
use crate::methods::io::{content_lines, parse_f64, parse_usize, MethodHeader};
use crate::methods::{Operator, SplittingMethod};
use crate::stability::{OperatorOrdering, DEFAULT_SCAN_DEPTH, BENCHMARK_EIGEN_RATIO};

pub use manifold::{manifold_residuals, solve_order_manifold, CoordinateLayout, MANIFOLD_MAX_ITERS, MANIFOLD_TOL};
pub use nelder_mead::{nelder_mead, SimplexOptions, SimplexResult};
pub use search::{minimize, minimize_lem, minimize_xhat, CandidateMethod, SearchStats};

/// Stability setting in which `x_hat` is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct XhatTemplate {
    pub ordering: OperatorOrdering,
    pub eigen_ratio: f64,
    pub plan: PlanSpec,
    pub scan_depth: f64,
}

impl Default for XhatTemplate {
    fn default() -> Self {
        XhatTemplate {
            ordering: OperatorOrdering::DR,
            eigen_ratio: BENCHMARK_EIGEN_RATIO,
            plan: PlanSpec::standard(),
            scan_depth: DEFAULT_SCAN_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    MinLem,
    MinXhat(XhatTemplate),
}

impl Objective {
    pub fn label(&self) -> &'static str {
        match self {
            Objective::MinLem => "lem",
            Objective::MinXhat(_) => "xhat",
        }
    }

    /// `[-2, 2]` for the error measure (low-LEM methods reach |alpha| ~ 1.7),
    /// `[-1, 1]` for `x_hat`.
    pub fn default_box(&self) -> (f64, f64) {
        match self {
            Objective::MinLem => (-2.0, 2.0),
            Objective::MinXhat(_) => (-1.0, 1.0),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A design problem: stage count, sparsity, box and objective.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub name: Option<String>,
    pub stages: usize,
    pub target_order: u32,
    /// 1-based `(stage, operator number)` positions forced to zero.
    pub zero_pattern: BTreeSet<(usize, usize)>,
    pub bounds: (f64, f64),
    pub objective: Objective,
    pub seeds: usize,
    pub rng_seed: u64,
}

impl DesignSpec {
    pub fn new(stages: usize, objective: Objective) -> Result<Self> {
        let spec = DesignSpec {
            name: None,
            stages,
            target_order: 3,
            zero_pattern: BTreeSet::new(),
            bounds: objective.default_box(),
            objective,
            seeds: 50,
            rng_seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_zero(mut self, stage: usize, operator: usize) -> Result<Self> {
        self.zero_pattern.insert((stage, operator));
        self.validate()?;
        Ok(self)
    }

    pub fn with_box(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.bounds = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    pub fn with_seeds(mut self, seeds: usize) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_rng_seed(mut self, rng_seed: u64) -> Self {
        self.rng_seed = rng_seed;
        self
    }

    pub fn is_forced_zero(&self, stage: usize, op: Operator) -> bool {
        self.zero_pattern.contains(&(stage, op.number()))
    }

    pub fn nonzero_count(&self) -> usize {
        2 * self.stages - self.zero_pattern.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_order != 3 {
            return Err(Error::input(format!(
                "only third-order designs are supported, got target order {}",
                self.target_order
            )));
        }
        if self.stages < 3 {
            return Err(Error::domain(format!(
                "no {}-stage 2-split method is third order; use at least 3 stages",
                self.stages
            )));
        }
        for &(k, l) in &self.zero_pattern {
            if k == 0 || k > self.stages || !(1..=2).contains(&l) {
                return Err(Error::input(format!("zero position ({k}, {l}) outside the {}x2 table", self.stages)));
            }
        }
        if self.nonzero_count() < 5 {
            return Err(Error::input(format!(
                "zero pattern leaves {} coefficients; at least 5 are needed",
                self.nonzero_count()
            )));
        }
        let (lo, hi) = self.bounds;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::input(format!("invalid box [{lo}, {hi}]")));
        }
        if let Objective::MinXhat(t) = &self.objective {
            if !(t.eigen_ratio.is_finite()) || !(t.scan_depth > 0.0) {
                return Err(Error::input("x_hat objective needs a finite ratio and positive scan depth"));
            }
        }
        Ok(())
    }

    /// Parses a design file: the method-file header keys plus `zero k l`,
    /// `box lo hi`, `seeds n`, `rng m`, `objective lem|xhat`, `ordering DR|RD`,
    /// `ratio r`, `plan d:r[+negfe]` and `depth d`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut header = MethodHeader::new();
        let mut zeros = BTreeSet::new();
        let mut bounds = None;
        let mut seeds = None;
        let mut rng = None;
        let mut objective = None;
        let mut template = XhatTemplate::default();
        let mut template_keys = false;
        let mut last = 0;
        for (line, tokens) in content_lines(text) {
            last = line;
            let want = |n: usize| -> Result<()> {
                if tokens.len() == n + 1 {
                    Ok(())
                } else {
                    Err(Error::Parse { line, message: format!("`{}` takes {n} argument(s)", tokens[0]) })
                }
            };
            let wrap = |e: Error| Error::Parse { line, message: e.to_string() };
            if header.accept(line, &tokens)? {
                continue;
            }
            match tokens[0] {
                "zero" => {
                    want(2)?;
                    zeros.insert((parse_usize(line, tokens[1])?, parse_usize(line, tokens[2])?));
                }
                "box" => {
                    want(2)?;
                    bounds = Some((parse_f64(line, tokens[1])?, parse_f64(line, tokens[2])?));
                }
                "seeds" => {
                    want(1)?;
                    seeds = Some(parse_usize(line, tokens[1])?);
                }
                "rng" => {
                    want(1)?;
                    rng = Some(tokens[1].parse::<u64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("expected an unsigned integer, got {:?}", tokens[1]),
                    })?);
                }
                "objective" => {
                    want(1)?;
                    objective = Some(match tokens[1] {
                        "lem" => false,
                        "xhat" => true,
                        other => {
                            return Err(Error::Parse { line, message: format!("unknown objective {other:?} (lem, xhat)") })
                        }
                    });
                }
                "ordering" => {
                    want(1)?;
                    template.ordering = OperatorOrdering::from_str(tokens[1]).map_err(wrap)?;
                    template_keys = true;
                }
                "ratio" => {
                    want(1)?;
                    template.eigen_ratio = parse_f64(line, tokens[1])?;
                    template_keys = true;
                }
                "plan" => {
                    want(1)?;
                    template.plan = PlanSpec::from_str(tokens[1]).map_err(wrap)?;
                    template_keys = true;
                }
                "depth" => {
                    want(1)?;
                    template.scan_depth = parse_f64(line, tokens[1])?;
                    template_keys = true;
                }
                other => return Err(Error::Parse { line, message: format!("unknown key {other:?}") }),
            }
        }
        if !header.rows.is_empty() {
            return Err(Error::Parse { line: last, message: "design files do not take coefficient rows".into() });
        }
        let stages = header.stages.ok_or(Error::Parse { line: last, message: "missing `stages` line".into() })?;
        let objective = match objective {
            Some(true) => Objective::MinXhat(template),
            Some(false) if template_keys => {
                return Err(Error::Parse { line: last, message: "ordering/ratio/plan/depth only apply to `objective xhat`".into() })
            }
            Some(false) => Objective::MinLem,
            None => return Err(Error::Parse { line: last, message: "missing `objective` line".into() }),
        };
        let mut spec = DesignSpec {
            name: header.name,
            stages,
            target_order: header.order.unwrap_or(3),
            zero_pattern: zeros,
            bounds: objective.default_box(),
            objective,
            seeds: seeds.unwrap_or(50),
            rng_seed: rng.unwrap_or(0),
        };
        if let Some(b) = bounds {
            spec.bounds = b;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The `name` key, or a label built from the objective, stage count and zeros.
    pub fn method_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let zeros: String = self.zero_pattern.iter().map(|(k, l)| format!("-z{k}{l}")).collect();
            format!("opt-{}-s{}{zeros}", self.objective.label(), self.stages)
        })
    }

    /// Largest distance of any non-forced-zero coefficient outside the box.
    pub fn box_violation(&self, m: &SplittingMethod) -> f64 {
        let (lo, hi) = self.bounds;
        m.rows().iter().flatten().map(|&v| (lo - v).max(v - hi).max(0.0)).fold(0.0, f64::max)
    }
}
