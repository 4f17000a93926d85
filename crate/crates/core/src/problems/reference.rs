//! Fine-step reference solutions with an on-disk cache.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrators::{integrate, IntegrateOptions, PlanSpec};
use crate::methods::lookup;

use super::fhn::RdFhn;

/// States at the configured sample times (including `t = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub config_hash: String,
    pub dt: f64,
    pub sample_times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// Step-halving protocol for [`reference_solution`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptions {
    pub initial_dt: f64,
    /// Consecutive solutions must agree to this absolute tolerance in every
    /// sampled voltage (three matching digits for O(1) values).
    pub tolerance: f64,
    pub max_halvings: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions {
            initial_dt: 1e-3,
            tolerance: 5e-4,
            max_halvings: 6,
        }
    }
}

fn solve(problem: &RdFhn, dt: f64) -> Result<Vec<Vec<f64>>> {
    let strang = lookup("strang")?;
    let plan = PlanSpec::standard().for_ordering(problem.ordering);
    let times = problem.config.sample_times();
    let traj = integrate(problem, &strang, &plan, 0.0, problem.config.t_end, dt, &IntegrateOptions::sampled(times))?;
    Ok(traj.states)
}

fn max_voltage_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).step_by(2).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

/// Strang splitting (SDIRK diffusion, RK3 reaction) with the step halved until
/// two consecutive solutions agree at all sample points.
pub fn compute_reference(problem: &RdFhn, opts: &ReferenceOptions) -> Result<ReferenceSolution> {
    let mut dt = opts.initial_dt;
    let mut prev = solve(problem, dt)?;
    let mut diff = f64::INFINITY;
    for _ in 0..opts.max_halvings {
        dt /= 2.0;
        let next = solve(problem, dt)?;
        diff = max_voltage_difference(&prev, &next);
        prev = next;
        if diff <= opts.tolerance {
            return Ok(ReferenceSolution {
                config_hash: problem.config.hash(),
                dt,
                sample_times: problem.config.sample_times(),
                states: prev,
            });
        }
    }
    Err(Error::domain(format!(
        "reference did not settle after {} halvings (last difference {diff:e} at dt = {dt:e})",
        opts.max_halvings
    )))
}

impl ReferenceSolution {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "hash {}", self.config_hash);
        let _ = writeln!(out, "dt {:e}", self.dt);
        for (t, y) in self.sample_times.iter().zip(&self.states) {
            let _ = write!(out, "{t:e}");
            for v in y {
                let _ = write!(out, " {v:e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut header = |key: &str| -> Result<String> {
            let (i, line) = lines.next().ok_or(Error::Parse { line: 0, message: "truncated cache".into() })?;
            line.strip_prefix(key)
                .map(|s| s.trim().to_string())
                .ok_or(Error::Parse { line: i + 1, message: format!("expected `{key}`") })
        };
        let config_hash = header("hash ")?;
        let dt_text = header("dt ")?;
        let dt = dt_text.parse().map_err(|_| Error::Parse { line: 2, message: "bad dt".into() })?;
        let mut sample_times = Vec::new();
        let mut states = Vec::new();
        for (i, line) in lines {
            let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|_| Error::Parse { line: i + 1, message: "bad number".into() })?;
            if vals.is_empty() {
                continue;
            }
            sample_times.push(vals[0]);
            states.push(vals[1..].to_vec());
        }
        Ok(ReferenceSolution { config_hash, dt, sample_times, states })
    }

    pub fn cache_path(dir: &Path, hash: &str) -> PathBuf {
        dir.join(format!("reference-{}.txt", &hash[..16.min(hash.len())]))
    }
}

/// Loads the cached reference for this configuration, computing and storing
/// it when missing or stale.
pub fn reference_solution(problem: &RdFhn, cache_dir: Option<&Path>, opts: &ReferenceOptions) -> Result<ReferenceSolution> {
    let hash = problem.config.hash();
    let path = cache_dir.map(|d| ReferenceSolution::cache_path(d, &hash));
    if let Some(path) = &path {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(r) = ReferenceSolution::parse(&text) {
                if r.config_hash == hash && r.states.len() == problem.config.sample_times().len() {
                    return Ok(r);
                }
            }
        }
    }
    let r = compute_reference(problem, opts)?;
    if let Some(path) = &path {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, r.to_text())?;
    }
    Ok(r)
}
