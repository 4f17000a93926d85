use crate::error::{Error, Result};
use crate::integrators::{integrate, IntegrateOptions, RunStats, SplitProblem, SubIntegratorPlan};
use crate::methods::SplittingMethod;

use super::mrms::mrms_grouped;

/// What a trial run is compared against.
#[derive(Debug, Clone)]
pub struct DtTrialSetup<'a> {
    pub t_end: f64,
    /// Times (in `(0, t_end]`) at which the error is measured.
    pub sample_times: Vec<f64>,
    /// Reference states at `sample_times`; `None` falls back to the problem's
    /// closed-form solution when a finite threshold is used.
    pub reference: Option<&'a [Vec<f64>]>,
    /// Interleaved layout `(groups, variable)`: the error is MRMS over columns
    /// `c` with `c % groups == variable`.
    pub variable: (usize, usize),
    /// Max-norm above which a run counts as blown up.
    pub blowup_limit: f64,
}

impl DtTrialSetup<'_> {
    /// Blow-up check only, over `[0, t_end]`.
    pub fn stability_only(t_end: f64, blowup_limit: f64) -> Self {
        DtTrialSetup {
            t_end,
            sample_times: vec![t_end],
            reference: None,
            variable: (1, 0),
            blowup_limit,
        }
    }
}

/// Outcome of one constant-step run.
#[derive(Debug, Clone, PartialEq)]
pub struct DtTrial {
    pub dt: f64,
    pub finished: bool,
    pub error: f64,
    pub stats: RunStats,
}

impl DtTrial {
    pub fn passes(&self, threshold: f64) -> bool {
        self.finished && self.error <= threshold
    }

    pub fn f_evals_per_step(&self) -> f64 {
        self.stats.total_f_evals() as f64 / self.stats.steps.max(1) as f64
    }
}

pub fn run_trial<P: SplitProblem + ?Sized>(
    problem: &P,
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    setup: &DtTrialSetup,
    dt: f64,
    threshold: f64,
) -> Result<DtTrial> {
    let opts = IntegrateOptions {
        sample_times: Some(setup.sample_times.clone()),
        blowup_limit: setup.blowup_limit,
        ..IntegrateOptions::default()
    };
    let traj = match integrate(problem, method, plan, 0.0, setup.t_end, dt, &opts) {
        Ok(traj) => traj,
        Err(f) => match f.error {
            Error::Instability { .. } | Error::SubIntegration { .. } => {
                return Ok(DtTrial { dt, finished: false, error: f64::INFINITY, stats: f.partial.stats })
            }
            e => return Err(e),
        },
    };
    if threshold == f64::INFINITY {
        return Ok(DtTrial { dt, finished: true, error: 0.0, stats: traj.stats });
    }
    let computed: Vec<Vec<f64>> = setup
        .sample_times
        .iter()
        .map(|&s| {
            let idx = traj.times.iter().position(|&t| t == s).expect("sample times are recorded");
            traj.states[idx].clone()
        })
        .collect();
    let exact;
    let reference = match setup.reference {
        Some(r) => r,
        None => {
            exact = setup
                .sample_times
                .iter()
                .map(|&s| problem.exact(s))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::input("no reference data and no closed-form solution"))?;
            &exact
        }
    };
    let (groups, var) = setup.variable;
    let report = mrms_grouped(&computed, reference, groups)?;
    let error = *report
        .per_variable
        .get(var)
        .ok_or_else(|| Error::input(format!("variable {var} out of range for {groups} groups")))?;
    Ok(DtTrial { dt, finished: true, error, stats: traj.stats })
}

/// Values `m * 10^e` with two-digit mantissa `m` in `[lo, hi]`, ascending.
pub fn two_sig_fig_grid(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = lo.log10().floor() as i32 - 2;
    loop {
        for m in 10..100 {
            // Parsed from decimal so grid values are the nearest doubles.
            let v: f64 = format!("{m}e{e}").parse().unwrap();
            if v > hi {
                return out;
            }
            if v >= lo {
                out.push(v);
            }
        }
        e += 1;
    }
}

/// Result of [`largest_stable_dt`].
#[derive(Debug, Clone, PartialEq)]
pub struct StableDt {
    pub dt: f64,
    /// The passing run at `dt`.
    pub trial: DtTrial,
    pub trials: usize,
}

/// Largest constant step size, to two significant figures, whose run
/// finishes without blow-up and has error at most `threshold`.
///
/// The predicate must hold at `bounds.0`; if it also holds at `bounds.1`,
/// the upper bound is returned. Bisection assumes a single transition.
pub fn largest_stable_dt<P: SplitProblem + ?Sized>(
    problem: &P,
    method: &SplittingMethod,
    plan: &SubIntegratorPlan,
    setup: &DtTrialSetup,
    bounds: (f64, f64),
    threshold: f64,
) -> Result<StableDt> {
    let (lo, hi) = bounds;
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::input(format!("need 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::input("threshold must be nonnegative"));
    }
    let mut trials = 0;
    let mut run = |dt: f64| {
        trials += 1;
        run_trial(problem, method, plan, setup, dt, threshold)
    };
    let upper = run(hi)?;
    if upper.passes(threshold) {
        return Ok(StableDt { dt: hi, trial: upper, trials: 1 });
    }
    let lower = run(lo)?;
    if !lower.passes(threshold) {
        return Err(Error::Bracket(format!(
            "{} fails at both dt = {lo} and dt = {hi}",
            method.name()
        )));
    }
    let grid = two_sig_fig_grid(lo, hi);
    // Invariant: grid[..a] passes (or is below lo), grid[b..] fails.
    let (mut a, mut b) = (0, grid.partition_point(|&v| v < hi));
    let mut best = (lo, lower);
    while a < b {
        let mid = (a + b) / 2;
        let t = run(grid[mid])?;
        if t.passes(threshold) {
            best = (grid[mid], t);
            a = mid + 1;
        } else {
            b = mid;
        }
    }
    Ok(StableDt { dt: best.0, trial: best.1, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::methods::lookup;
    use crate::problems::linear::LinearPair;
    use crate::stability::ButcherTableau;

    #[test]
    fn grid_values() {
        let g = two_sig_fig_grid(0.095, 0.13);
        assert_eq!(g, vec![0.095, 0.096, 0.097, 0.098, 0.099, 0.1, 0.11, 0.12, 0.13]);
    }

    #[test]
    fn unconditionally_stable_returns_upper_bound() {
        let p = LinearPair::real(-50.0, -3.0);
        let lt = lookup("lie-trotter").unwrap();
        let plan = SubIntegratorPlan::uniform(ButcherTableau::sdirk23());
        let setup = DtTrialSetup::stability_only(5.0, 1e3);
        let r = largest_stable_dt(&p, &lt, &plan, &setup, (0.01, 1.0), f64::INFINITY).unwrap();
        assert_eq!(r.dt, 1.0);
    }

    #[test]
    fn forward_euler_bound() {
        let lambda = -37.0;
        let p = LinearPair::real(lambda, 0.0);
        let lt = lookup("lie-trotter").unwrap();
        let plan = SubIntegratorPlan::uniform(ButcherTableau::forward_euler());
        let setup = DtTrialSetup::stability_only(200.0, 1e3);
        let r = largest_stable_dt(&p, &lt, &plan, &setup, (0.01, 0.2), f64::INFINITY).unwrap();
        let expected = 2.0 / lambda.abs();
        assert!((r.dt - expected).abs() <= 0.011 * expected, "{} vs {expected}", r.dt);
    }

    #[test]
    fn accuracy_threshold_uses_exact_solution() {
        let p = LinearPair::real(-1.0, -0.5);
        let lt = lookup("lie-trotter").unwrap();
        let plan = SubIntegratorPlan::uniform(ButcherTableau::rk3());
        let setup = DtTrialSetup {
            t_end: 2.0,
            sample_times: vec![0.5, 1.0, 1.5, 2.0],
            reference: None,
            variable: (2, 0),
            blowup_limit: 1e6,
        };
        let loose = largest_stable_dt(&p, &lt, &plan, &setup, (0.001, 0.5), 1e-2).unwrap();
        let tight = largest_stable_dt(&p, &lt, &plan, &setup, (0.001, 0.5), 1e-4).unwrap();
        assert!(tight.dt < loose.dt);
        assert!(tight.trial.error <= 1e-4);
    }

    #[test]
    fn failing_bracket() {
        let p = LinearPair::real(-100.0, 0.0);
        let lt = lookup("lie-trotter").unwrap();
        let plan = SubIntegratorPlan::uniform(ButcherTableau::forward_euler());
        let setup = DtTrialSetup::stability_only(50.0, 1e3);
        match largest_stable_dt(&p, &lt, &plan, &setup, (0.5, 1.0), f64::INFINITY) {
            Err(Error::Bracket(_)) => {}
            other => panic!("{other:?}"),
        }
        assert!(largest_stable_dt(&p, &lt, &plan, &setup, (1.0, 0.5), f64::INFINITY).is_err());
    }
}
