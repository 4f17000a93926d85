use std::fmt;
use std::fmt::Write as _;

use super::{rk_step, OperatorField, SplitProblem, SubIntegratorPlan};
use crate::error::{Error, Result};
use crate::methods::{Operator, SplittingMethod};

/// Diagnostics for one executed sub-integration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based splitting stage.
    pub stage: usize,
    pub operator: Operator,
    pub alpha: f64,
    pub tableau: String,
    pub newton_iters: usize,
    pub f_evals: usize,
}

/// One FSRK step of size `dt` with one RK step per sub-integration.
pub fn fsrk_step<P: SplitProblem + ?Sized>(
    problem: &P,
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    t: f64,
    y: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<StepRecord>)> {
    fsrk_step_with(problem, method, plan, t, y, dt, 1)
}

/// As [`fsrk_step`], with each sub-integration split into `substeps` equal RK steps.
///
/// Sub-integrations run in stage order, operator 1 before operator 2, each
/// starting from the previous result; zero coefficients are skipped. Each
/// operator keeps its own clock, advanced by `alpha * dt` after every one of
/// its sub-flows. `dt` may be negative (used for time reversal).
pub fn fsrk_step_with<P: SplitProblem + ?Sized>(
    problem: &P,
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    t: f64,
    y: &[f64],
    dt: f64,
    substeps: usize,
) -> Result<(Vec<f64>, Vec<StepRecord>)> {
    if dt == 0.0 || !dt.is_finite() {
        return Err(Error::input(format!("dt must be finite and nonzero, got {dt}")));
    }
    if substeps == 0 {
        return Err(Error::input("substeps must be at least 1"));
    }
    if y.len() != problem.dim() {
        return Err(Error::input(format!(
            "state has length {} but problem {} has dimension {}",
            y.len(),
            problem.label(),
            problem.dim()
        )));
    }
    let mut clocks = [t, t];
    let mut state = y.to_vec();
    let mut records = Vec::with_capacity(method.sub_integration_count());
    for (stage, op, alpha) in method.flows() {
        let tab = plan.resolve(stage, op, alpha);
        let field = OperatorField::new(problem, op);
        let h = alpha * dt / substeps as f64;
        let mut rec = StepRecord {
            stage,
            operator: op,
            alpha,
            tableau: tab.name().to_string(),
            newton_iters: 0,
            f_evals: 0,
        };
        let mut tc = clocks[op.index()];
        for _ in 0..substeps {
            let (next, stats) = rk_step(&field, tc, &state, h, tab).map_err(|e| match e {
                Error::Step(source) => Error::SubIntegration {
                    stage,
                    operator: op,
                    source,
                },
                other => other,
            })?;
            state = next;
            tc += h;
            rec.newton_iters += stats.newton_iters;
            rec.f_evals += stats.f_evals;
        }
        clocks[op.index()] += alpha * dt;
        records.push(rec);
    }
    Ok((state, records))
}

/// Options for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    /// If set, steps are shortened to land on these times and only they (plus
    /// `t0` and `tf`) are recorded.
    pub sample_times: Option<Vec<f64>>,
    /// Otherwise every `stride`-th step is recorded (`tf` always is).
    pub stride: usize,
    /// A state with a non-finite entry or max-norm above this counts as blow-up.
    pub blowup_limit: f64,
    pub substeps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            sample_times: None,
            stride: 1,
            blowup_limit: 1e10,
            substeps: 1,
        }
    }
}

impl IntegrateOptions {
    pub fn sampled(times: Vec<f64>) -> Self {
        IntegrateOptions {
            sample_times: Some(times),
            ..Self::default()
        }
    }
}

/// Work counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunStats {
    pub steps: usize,
    /// Right-hand-side evaluations per split operator.
    pub f_evals: [usize; 2],
    pub newton_iters: usize,
}

impl RunStats {
    pub fn total_f_evals(&self) -> usize {
        self.f_evals[0] + self.f_evals[1]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.states.last()?.as_slice()))
    }

    /// `t,y_0,...,y_{n-1}` rows, every `stride`-th recorded state.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",y_{i}");
        }
        out.push('\n');
        let last = self.times.len().saturating_sub(1);
        for (idx, (t, y)) in self.times.iter().zip(&self.states).enumerate() {
            if idx % stride != 0 && idx != last {
                continue;
            }
            let _ = write!(out, "{t:.12e}");
            for v in y {
                let _ = write!(out, ",{v:.12e}");
            }
            out.push('\n');
        }
        out
    }
}

/// An aborted run: the error plus everything computed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} steps)", self.error, self.partial.stats.steps)
    }
}

impl std::error::Error for IntegrationFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        f.error
    }
}

/// Fixed-step march from `t0` to `tf` starting at the problem's initial state.
/// The last step (and any step crossing a sample time) is shortened to land exactly.
pub fn integrate<P: SplitProblem + ?Sized>(
    problem: &P,
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    t0: f64,
    tf: f64,
    dt: f64,
    opts: &IntegrateOptions,
) -> std::result::Result<Trajectory, IntegrationFailure> {
    let fail = |error: Error, partial: Trajectory| Err(IntegrationFailure { error, partial });
    if !(tf > t0) || !t0.is_finite() || !tf.is_finite() {
        return fail(Error::input(format!("need t0 < tf, got [{t0}, {tf}]")), Trajectory::default());
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return fail(Error::input(format!("dt must be positive, got {dt}")), Trajectory::default());
    }
    if let Err(e) = plan.validate_for(method) {
        return fail(e, Trajectory::default());
    }
    let mut stops: Vec<f64> = match &opts.sample_times {
        Some(ts) => {
            if ts.iter().any(|&s| !s.is_finite() || s < t0 || s > tf) {
                return fail(Error::input("sample times must lie in [t0, tf]"), Trajectory::default());
            }
            ts.iter().copied().filter(|&s| s > t0).collect()
        }
        None => Vec::new(),
    };
    stops.push(tf);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut traj = Trajectory::default();
    let mut y = problem.initial_state();
    let mut t = t0;
    traj.times.push(t);
    traj.states.push(y.clone());
    let tiny = 1e-12 * (tf - t0).abs().max(dt);

    let mut since_record = 0;
    for &stop in &stops {
        while stop - t > tiny {
            let remaining = stop - t;
            // Avoid a sliver step: merge it into the current one.
            let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
            match fsrk_step_with(problem, method, plan, t, &y, h, opts.substeps) {
                Ok((next, records)) => {
                    for r in &records {
                        traj.stats.f_evals[r.operator.index()] += r.f_evals;
                        traj.stats.newton_iters += r.newton_iters;
                    }
                    y = next;
                }
                Err(e) => return fail(e, traj),
            }
            t = if h == remaining { stop } else { t + h };
            traj.stats.steps += 1;
            let norm = y.iter().fold(0.0_f64, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v.abs()) });
            if !norm.is_finite() || norm > opts.blowup_limit {
                return fail(Error::Instability { time: t }, traj);
            }
            since_record += 1;
            if opts.sample_times.is_none() && since_record >= opts.stride.max(1) && t != stop {
                traj.times.push(t);
                traj.states.push(y.clone());
                since_record = 0;
            }
        }
        traj.times.push(stop);
        traj.states.push(y.clone());
        since_record = 0;
    }
    Ok(traj)
}
