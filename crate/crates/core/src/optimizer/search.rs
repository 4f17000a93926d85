use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::manifold::{manifold_residuals, solve_with_layout, CoordinateLayout};
use super::nelder_mead::{nelder_mead, SimplexOptions};
use super::{DesignSpec, Objective, XhatTemplate};
use crate::error::{Error, Result};
use crate::methods::order::fourth_order_sums;
use crate::methods::{order_condition_residuals_with_tol, SplittingMethod};
use crate::stability::{find_xhat_with, ScanOptions, StabilityContext};

/// Random (free, guess) draws tried before a start is declared infeasible.
const START_ATTEMPTS: usize = 50;
const SIMPLEX_RESTARTS: usize = 3;
const BOX_PENALTY: f64 = 1e6;
const FEASIBLE_RESIDUAL: f64 = 1e-9;
const BOX_SLACK: f64 = 1e-12;

/// Best method found by a search.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMethod {
    pub method: SplittingMethod,
    pub objective_value: f64,
    pub order_residual_norm: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub starts: usize,
    /// Starts for which no point on the order manifold was found.
    pub infeasible_starts: usize,
    /// Objective evaluations that failed (and scored `+inf`).
    pub discarded_evaluations: usize,
    pub objective_evaluations: usize,
}

fn lem_value(a: &[f64], b: &[f64]) -> f64 {
    let (s1, s2, s3) = fourth_order_sums(a, b);
    let (l1, l2, l3) = (4.0 * s1 - 1.0, 6.0 * s2 - 1.0, 4.0 * s3 - 1.0);
    (l1 * l1 + l2 * l2 + l3 * l3).sqrt()
}

fn xhat_value(rows: Vec<[f64; 2]>, t: &XhatTemplate, scan: &ScanOptions) -> Option<f64> {
    let m = SplittingMethod::new("candidate", rows, 0).ok()?;
    let ctx = StabilityContext::from_spec(m, &t.plan, t.ordering, t.eigen_ratio).ok()?;
    let r = find_xhat_with(&ctx, scan).ok()?;
    match r.xhat {
        // Unstable right at the first scan point: unusable.
        Some(x) if x.abs() <= scan.depth * 1e-10 => Some(f64::INFINITY),
        Some(x) => Some(x),
        // Stable over the whole scan: all that is known is x_hat <= -depth.
        None => Some(-scan.depth),
    }
}

fn lex_cmp(a: &[[f64; 2]], b: &[[f64; 2]]) -> Ordering {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Lower objective first, then lexicographically smaller coefficients.
fn better(f: f64, rows: &[[f64; 2]], best: &Option<(f64, Vec<[f64; 2]>)>) -> bool {
    match best {
        None => true,
        Some((bf, brows)) => match f.total_cmp(bf) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => lex_cmp(rows, brows) == Ordering::Less,
        },
    }
}

struct StartOutcome {
    best: Option<(f64, Vec<[f64; 2]>)>,
    best_residual: f64,
    best_violation: f64,
    feasible_start: bool,
    discarded: usize,
    evaluations: usize,
}

fn run_start(spec: &DesignSpec, layout: &CoordinateLayout, index: usize) -> StartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    rng.set_stream(index as u64);
    let (lo, hi) = spec.bounds;
    let nf = layout.free_count();
    let mut out = StartOutcome {
        best: None,
        best_residual: f64::INFINITY,
        best_violation: f64::INFINITY,
        feasible_start: false,
        discarded: 0,
        evaluations: 0,
    };

    let violation = |free: &[f64], dep: &[f64]| {
        free.iter().chain(dep).map(|&v| (lo - v).max(v - hi).max(0.0)).fold(0.0, f64::max)
    };

    let mut start = None;
    for _ in 0..START_ATTEMPTS {
        let free: Vec<f64> = (0..nf).map(|_| rng.gen_range(lo..hi)).collect();
        let guess: Vec<f64> = (0..5).map(|_| rng.gen_range(lo..hi)).collect();
        let r = manifold_residuals(layout, &free, &guess);
        out.best_residual = out.best_residual.min(r.iter().map(|v| v * v).sum::<f64>().sqrt());
        if let Some(dep) = solve_with_layout(layout, &free, &guess) {
            out.best_residual = 0.0_f64.max(out.best_residual.min(
                manifold_residuals(layout, &free, &dep).iter().map(|v| v * v).sum::<f64>().sqrt(),
            ));
            start = Some((free, dep));
            break;
        }
    }
    let Some((free0, dep0)) = start else { return out };
    out.feasible_start = true;

    let coarse = match &spec.objective {
        Objective::MinXhat(t) => Some(ScanOptions::coarse(t.scan_depth)),
        Objective::MinLem => None,
    };
    let mut warm = dep0.clone();
    // Best feasible point of this start in the coarse objective.
    let mut best_seen: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut best_violation = f64::INFINITY;
    let mut discarded = 0;
    let mut evaluations = 0;
    let mut objective = |free: &[f64]| -> f64 {
        evaluations += 1;
        let Some(dep) = solve_with_layout(layout, free, &warm).or_else(|| solve_with_layout(layout, free, &dep0)) else {
            return f64::INFINITY;
        };
        warm.clone_from(&dep);
        let v = violation(free, &dep);
        best_violation = best_violation.min(v);
        if v > BOX_SLACK {
            return BOX_PENALTY + v;
        }
        let f = match &spec.objective {
            Objective::MinLem => {
                let (a, b) = layout.assemble(free, &dep);
                lem_value(&a, &b)
            }
            Objective::MinXhat(t) => match xhat_value(layout.rows(free, &dep), t, coarse.as_ref().unwrap()) {
                Some(x) => x,
                None => {
                    discarded += 1;
                    f64::INFINITY
                }
            },
        };
        if f.is_finite() {
            let replace = match &best_seen {
                None => true,
                Some((bf, bfree, bdep)) => {
                    f < *bf || (f == *bf && lex_cmp(&layout.rows(free, &dep), &layout.rows(bfree, bdep)) == Ordering::Less)
                }
            };
            if replace {
                best_seen = Some((f, free.to_vec(), dep));
            }
        }
        f
    };

    let opts = SimplexOptions::default();
    let step = 0.1 * (hi - lo);
    let mut x = free0.clone();
    for restart in 0..SIMPLEX_RESTARTS {
        let r = nelder_mead(&mut objective, &x, step * 0.1f64.powi(restart as i32), &opts);
        x = r.x;
    }
    out.best_violation = best_violation;
    out.discarded = discarded;
    out.evaluations = evaluations;

    let Some((f, free, dep)) = best_seen else { return out };
    let rows = layout.rows(&free, &dep);
    let value = match &spec.objective {
        Objective::MinLem => Some(f),
        Objective::MinXhat(t) => xhat_value(rows.clone(), t, &ScanOptions::with_depth(t.scan_depth)),
    };
    match value {
        Some(v) if v.is_finite() => out.best = Some((v, rows)),
        _ => out.discarded += 1,
    }
    out
}

/// Runs every start of `spec` and returns the best feasible candidate.
pub fn minimize(spec: &DesignSpec) -> Result<(CandidateMethod, SearchStats)> {
    spec.validate()?;
    let layout = CoordinateLayout::new(spec);
    let mut stats = SearchStats { starts: spec.seeds, ..SearchStats::default() };
    let mut best: Option<(f64, Vec<[f64; 2]>)> = None;
    let (mut best_residual, mut best_violation) = (f64::INFINITY, f64::INFINITY);
    for index in 0..spec.seeds {
        let o = run_start(spec, &layout, index);
        if !o.feasible_start {
            stats.infeasible_starts += 1;
        }
        stats.discarded_evaluations += o.discarded;
        stats.objective_evaluations += o.evaluations;
        best_residual = best_residual.min(o.best_residual);
        best_violation = best_violation.min(o.best_violation);
        if let Some((f, rows)) = o.best {
            if better(f, &rows, &best) {
                best = Some((f, rows));
            }
        }
    }
    let Some((objective_value, rows)) = best else {
        return Err(Error::SearchFailure { starts: spec.seeds, best_residual, best_violation });
    };
    let method = SplittingMethod::new(spec.method_name(), rows, 0)?;
    let report = order_condition_residuals_with_tol(&method, 3, FEASIBLE_RESIDUAL)?;
    let order_residual_norm = report
        .residuals_by_order
        .values()
        .flatten()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    let feasible = order_residual_norm < FEASIBLE_RESIDUAL && spec.box_violation(&method) <= BOX_SLACK;
    let method = if feasible { method.with_claimed_order(spec.target_order) } else { method };
    Ok((
        CandidateMethod { method, objective_value, order_residual_norm, feasible },
        stats,
    ))
}

/// Minimizes LEM(3) over the third-order methods allowed by `spec`.
pub fn minimize_lem(spec: &DesignSpec) -> Result<CandidateMethod> {
    if spec.objective != Objective::MinLem {
        return Err(Error::input("minimize_lem needs `objective lem`"));
    }
    minimize(spec).map(|(c, _)| c)
}

/// Minimizes `x_hat` (most negative wins) in the design's stability setting.
pub fn minimize_xhat(spec: &DesignSpec) -> Result<CandidateMethod> {
    if !matches!(spec.objective, Objective::MinXhat(_)) {
        return Err(Error::input("minimize_xhat needs `objective xhat`"));
    }
    minimize(spec).map(|(c, _)| c)
}
