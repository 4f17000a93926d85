//! Reaction–diffusion benchmark with a FitzHugh–Nagumo membrane model.
//!
//! `v_t = D lap(v) + k v (v - a)(1 - v) - w + I_stim`, `w_t = eps (v - gamma w)`,
//! on a 1D or 2D grid with homogeneous Neumann boundaries. The state is
//! interleaved as `[v_0, w_0, v_1, w_1, ...]`.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrators::SplitProblem;
use crate::linalg::BandMatrix;
use crate::methods::io::{content_lines, parse_f64, parse_usize};
use crate::methods::Operator;
use crate::stability::OperatorOrdering;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FhnParams {
    pub k: f64,
    pub a: f64,
    pub eps: f64,
    pub gamma: f64,
}

impl Default for FhnParams {
    /// Fast recovery variable: the rest-state Jacobian has a stiff eigenvalue
    /// near `-eps * gamma = -1260`.
    fn default() -> Self {
        FhnParams {
            k: 8.0,
            a: 0.1,
            eps: 126.0,
            gamma: 10.0,
        }
    }
}

/// Square current pulse on a block of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSpec {
    /// Inclusive node range `(lo, hi)` along x (and y in 2D: `lo..=hi` in both).
    pub indices: (usize, usize),
    pub window: (f64, f64),
    pub amplitude: f64,
}

impl Default for StimulusSpec {
    fn default() -> Self {
        StimulusSpec {
            indices: (0, 9),
            window: (0.0, 1.0),
            amplitude: 1.0,
        }
    }
}

/// Full benchmark configuration, including the integration window.
#[derive(Debug, Clone, PartialEq)]
pub struct RdFhnConfig {
    pub nx: usize,
    pub ny: Option<usize>,
    pub dx: f64,
    pub diffusion: f64,
    pub fhn: FhnParams,
    pub stimulus: Option<StimulusSpec>,
    pub t_end: f64,
    /// Number of uniformly spaced sample times in `[0, t_end]` for the error metric.
    pub samples: usize,
}

impl Default for RdFhnConfig {
    fn default() -> Self {
        RdFhnConfig {
            nx: 201,
            ny: None,
            dx: 0.05,
            diffusion: 0.0012,
            fhn: FhnParams::default(),
            stimulus: Some(StimulusSpec::default()),
            t_end: 40.0,
            samples: 21,
        }
    }
}

impl RdFhnConfig {
    pub fn sample_times(&self) -> Vec<f64> {
        let m = self.samples.max(2);
        (0..m).map(|i| self.t_end * i as f64 / (m - 1) as f64).collect()
    }

    /// Parses `key value...` lines; unspecified keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RdFhnConfig::default();
        for (line, tokens) in content_lines(text) {
            let arg = |i: usize| -> Result<&str> {
                tokens.get(i).copied().ok_or(Error::Parse {
                    line,
                    message: format!("`{}` needs {} argument(s)", tokens[0], i),
                })
            };
            match tokens[0] {
                "problem" => match arg(1)? {
                    "fhn1d" => cfg.ny = None,
                    "fhn2d" => cfg.ny = Some(cfg.ny.unwrap_or(cfg.nx)),
                    other => {
                        return Err(Error::Parse {
                            line,
                            message: format!("unknown problem {other:?} (fhn1d, fhn2d)"),
                        })
                    }
                },
                "nx" => cfg.nx = parse_usize(line, arg(1)?)?,
                "ny" => cfg.ny = Some(parse_usize(line, arg(1)?)?),
                "dx" => cfg.dx = parse_f64(line, arg(1)?)?,
                "diff" => cfg.diffusion = parse_f64(line, arg(1)?)?,
                "eps" => cfg.fhn.eps = parse_f64(line, arg(1)?)?,
                "gamma" => cfg.fhn.gamma = parse_f64(line, arg(1)?)?,
                "k" => cfg.fhn.k = parse_f64(line, arg(1)?)?,
                "a" => cfg.fhn.a = parse_f64(line, arg(1)?)?,
                "stim_indices" => {
                    let s = cfg.stimulus.get_or_insert_with(StimulusSpec::default);
                    s.indices = (parse_usize(line, arg(1)?)?, parse_usize(line, arg(2)?)?);
                }
                "stim_window" => {
                    let s = cfg.stimulus.get_or_insert_with(StimulusSpec::default);
                    s.window = (parse_f64(line, arg(1)?)?, parse_f64(line, arg(2)?)?);
                }
                "stim_amp" => {
                    let s = cfg.stimulus.get_or_insert_with(StimulusSpec::default);
                    s.amplitude = parse_f64(line, arg(1)?)?;
                }
                "no_stim" => cfg.stimulus = None,
                "t_end" => cfg.t_end = parse_f64(line, arg(1)?)?,
                "samples" => cfg.samples = parse_usize(line, arg(1)?)?,
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; also the input of [`Self::hash`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "problem {}", if self.ny.is_some() { "fhn2d" } else { "fhn1d" });
        let _ = writeln!(out, "nx {}", self.nx);
        if let Some(ny) = self.ny {
            let _ = writeln!(out, "ny {ny}");
        }
        let _ = writeln!(out, "dx {:e}", self.dx);
        let _ = writeln!(out, "diff {:e}", self.diffusion);
        let _ = writeln!(out, "k {:e}", self.fhn.k);
        let _ = writeln!(out, "a {:e}", self.fhn.a);
        let _ = writeln!(out, "eps {:e}", self.fhn.eps);
        let _ = writeln!(out, "gamma {:e}", self.fhn.gamma);
        match &self.stimulus {
            Some(s) => {
                let _ = writeln!(out, "stim_indices {} {}", s.indices.0, s.indices.1);
                let _ = writeln!(out, "stim_window {:e} {:e}", s.window.0, s.window.1);
                let _ = writeln!(out, "stim_amp {:e}", s.amplitude);
            }
            None => out.push_str("no_stim\n"),
        }
        let _ = writeln!(out, "t_end {:e}", self.t_end);
        let _ = writeln!(out, "samples {}", self.samples);
        out
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The split problem; operator roles follow an [`OperatorOrdering`].
#[derive(Debug, Clone, PartialEq)]
pub struct RdFhn {
    pub config: RdFhnConfig,
    pub ordering: OperatorOrdering,
    nodes: usize,
    label: String,
}

pub fn make_rd_fhn(config: RdFhnConfig, ordering: OperatorOrdering) -> Result<RdFhn> {
    if config.nx < 3 || config.ny.is_some_and(|ny| ny < 3) {
        return Err(Error::input("grid needs at least 3 nodes per direction"));
    }
    if !(config.dx > 0.0) || !config.dx.is_finite() {
        return Err(Error::input(format!("dx must be positive, got {}", config.dx)));
    }
    if !(config.diffusion >= 0.0) || !config.t_end.is_finite() || !(config.t_end > 0.0) {
        return Err(Error::input("diffusion must be >= 0 and t_end > 0"));
    }
    if let Some(s) = &config.stimulus {
        if s.indices.0 > s.indices.1 || s.indices.1 >= config.nx {
            return Err(Error::input(format!("stimulus indices {:?} outside the grid", s.indices)));
        }
    }
    let nodes = config.nx * config.ny.unwrap_or(1);
    let label = format!("fhn{}d-{ordering}", if config.ny.is_some() { 2 } else { 1 });
    Ok(RdFhn {
        config,
        ordering,
        nodes,
        label,
    })
}

impl RdFhn {
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn with_ordering(&self, ordering: OperatorOrdering) -> RdFhn {
        make_rd_fhn(self.config.clone(), ordering).expect("config already validated")
    }

    fn stimulated(&self, node: usize) -> bool {
        let Some(s) = &self.config.stimulus else { return false };
        let nx = self.config.nx;
        let (i, j) = (node % nx, node / nx);
        let inside = |c: usize| c >= s.indices.0 && c <= s.indices.1;
        inside(i) && (self.config.ny.is_none() || inside(j))
    }

    fn stimulus_at(&self, t: f64) -> f64 {
        match &self.config.stimulus {
            Some(s) if t >= s.window.0 && t < s.window.1 => s.amplitude,
            _ => 0.0,
        }
    }

    /// Pointwise reaction term.
    pub fn reaction(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let p = &self.config.fhn;
        let stim = self.stimulus_at(t);
        for node in 0..self.nodes {
            let (v, w) = (y[2 * node], y[2 * node + 1]);
            let mut dv = p.k * v * (v - p.a) * (1.0 - v) - w;
            if stim != 0.0 && self.stimulated(node) {
                dv += stim;
            }
            out[2 * node] = dv;
            out[2 * node + 1] = p.eps * (v - p.gamma * w);
        }
    }

    fn neighbours(&self, node: usize) -> [Option<usize>; 4] {
        // Neumann ghost reflection: the missing neighbour mirrors the interior one.
        let nx = self.config.nx;
        let (i, j) = (node % nx, node / nx);
        let west = if i == 0 { node + 1 } else { node - 1 };
        let east = if i == nx - 1 { node - 1 } else { node + 1 };
        match self.config.ny {
            None => [Some(west), Some(east), None, None],
            Some(ny) => {
                let south = if j == 0 { node + nx } else { node - nx };
                let north = if j == ny - 1 { node - nx } else { node + nx };
                [Some(west), Some(east), Some(south), Some(north)]
            }
        }
    }

    /// `D * lap(v)` in the v slots, zero in the w slots.
    pub fn diffusion(&self, y: &[f64], out: &mut [f64]) {
        let c = self.config.diffusion / (self.config.dx * self.config.dx);
        for node in 0..self.nodes {
            let v = y[2 * node];
            let mut lap = 0.0;
            for nb in self.neighbours(node).into_iter().flatten() {
                lap += y[2 * nb] - v;
            }
            out[2 * node] = c * lap;
            out[2 * node + 1] = 0.0;
        }
    }

    fn diffusion_bandwidth(&self) -> usize {
        2 * if self.config.ny.is_some() { self.config.nx } else { 1 }
    }

    fn diffusion_matrix(&self) -> BandMatrix {
        let bw = self.diffusion_bandwidth();
        let n = 2 * self.nodes;
        let mut m = BandMatrix::zeros(n, bw, bw);
        let c = self.config.diffusion / (self.config.dx * self.config.dx);
        for node in 0..self.nodes {
            for nb in self.neighbours(node).into_iter().flatten() {
                m.add(2 * node, 2 * nb, c);
                m.add(2 * node, 2 * node, -c);
            }
        }
        m
    }

    fn reaction_matrix(&self, y: &[f64]) -> BandMatrix {
        let p = &self.config.fhn;
        let mut m = BandMatrix::zeros(2 * self.nodes, 1, 1);
        for node in 0..self.nodes {
            let v = y[2 * node];
            let (iv, iw) = (2 * node, 2 * node + 1);
            m.set(iv, iv, p.k * (-3.0 * v * v + 2.0 * (1.0 + p.a) * v - p.a));
            m.set(iv, iw, -1.0);
            m.set(iw, iv, p.eps);
            m.set(iw, iw, -p.eps * p.gamma);
        }
        m
    }

    /// Eigenvalues of the 2x2 reaction Jacobian block at `(v, w)`.
    pub fn reaction_block_eigenvalues(&self, v: f64) -> [num_complex::Complex64; 2] {
        let p = &self.config.fhn;
        let j11 = p.k * (-3.0 * v * v + 2.0 * (1.0 + p.a) * v - p.a);
        let (j12, j21, j22) = (-1.0, p.eps, -p.eps * p.gamma);
        let tr = j11 + j22;
        let det = j11 * j22 - j12 * j21;
        let disc = num_complex::Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
        [(tr + disc) / 2.0, (tr - disc) / 2.0]
    }

    /// The voltage components of a state.
    pub fn voltages(y: &[f64]) -> Vec<f64> {
        y.iter().step_by(2).copied().collect()
    }

    pub fn diffusion_operator(&self) -> Operator {
        self.ordering.diffusion_operator()
    }
}

impl SplitProblem for RdFhn {
    fn label(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        2 * self.nodes
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![0.0; 2 * self.nodes]
    }

    fn eval(&self, op: Operator, t: f64, y: &[f64], out: &mut [f64]) {
        if op == self.diffusion_operator() {
            self.diffusion(y, out)
        } else {
            self.reaction(t, y, out)
        }
    }

    fn jacobian(&self, op: Operator, _t: f64, y: &[f64]) -> Option<BandMatrix> {
        Some(if op == self.diffusion_operator() {
            self.diffusion_matrix()
        } else {
            self.reaction_matrix(y)
        })
    }

    fn bandwidth(&self, op: Operator) -> Option<(usize, usize)> {
        let b = if op == self.diffusion_operator() { self.diffusion_bandwidth() } else { 1 };
        Some((b, b))
    }

    fn is_linear(&self, op: Operator) -> bool {
        op == self.diffusion_operator()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::{integrate, IntegrateOptions, SubIntegratorPlan};
    use crate::methods::lookup;
    use crate::stability::ButcherTableau;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small(ny: Option<usize>) -> RdFhn {
        let cfg = RdFhnConfig {
            nx: 7,
            ny,
            stimulus: Some(StimulusSpec { indices: (0, 1), window: (0.0, 1.0), amplitude: 1.0 }),
            ..RdFhnConfig::default()
        };
        make_rd_fhn(cfg, OperatorOrdering::DR).unwrap()
    }

    /// Independent full right-hand side written without the split.
    fn full_rhs(p: &RdFhn, t: f64, y: &[f64]) -> Vec<f64> {
        let c = &p.config;
        let nx = c.nx;
        let ny = c.ny.unwrap_or(1);
        let v = |i: isize, j: isize| {
            let ii = if i < 0 { 1 } else if i >= nx as isize { nx as isize - 2 } else { i };
            let jj = if ny == 1 { 0 } else if j < 0 { 1 } else if j >= ny as isize { ny as isize - 2 } else { j };
            y[2 * (jj as usize * nx + ii as usize)]
        };
        let mut out = vec![0.0; y.len()];
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let node = j as usize * nx + i as usize;
                let vc = v(i, j);
                let mut lap = v(i - 1, j) + v(i + 1, j) - 2.0 * vc;
                if ny > 1 {
                    lap += v(i, j - 1) + v(i, j + 1) - 2.0 * vc;
                }
                let w = y[2 * node + 1];
                let f = &c.fhn;
                let mut dv = c.diffusion / (c.dx * c.dx) * lap + f.k * vc * (vc - f.a) * (1.0 - vc) - w;
                let s = c.stimulus.as_ref().unwrap();
                let in_block = |k: isize| k >= s.indices.0 as isize && k <= s.indices.1 as isize;
                if t >= s.window.0 && t < s.window.1 && in_block(i) && (ny == 1 || in_block(j)) {
                    dv += s.amplitude;
                }
                out[2 * node] = dv;
                out[2 * node + 1] = f.eps * (vc - f.gamma * w);
            }
        }
        out
    }

    #[test]
    fn split_matches_full_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for ny in [None, Some(5)] {
            let p = small(ny);
            for _ in 0..100 {
                let y: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-1.0..1.5)).collect();
                let t = rng.gen_range(0.0..2.0);
                let mut split = vec![0.0; p.dim()];
                p.eval_full(t, &y, &mut split);
                let full = full_rhs(&p, t, &y);
                for (a, b) in split.iter().zip(&full) {
                    assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn diffusion_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = small(Some(4));
        let n = p.dim();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -1.3);
        let comb: Vec<f64> = y.iter().zip(&z).map(|(u, v)| a * u + b * v).collect();
        let (mut fy, mut fz, mut fc) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        p.diffusion(&y, &mut fy);
        p.diffusion(&z, &mut fz);
        p.diffusion(&comb, &mut fc);
        for i in 0..n {
            assert!((fc[i] - (a * fy[i] + b * fz[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_jacobians_match_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for ny in [None, Some(4)] {
            let p = small(ny);
            let n = p.dim();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let d = p.diffusion_operator();
            let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
            p.jacobian(d, 0.0, &y).unwrap().matvec(&x, &mut a);
            p.eval(d, 0.0, &x, &mut b);
            for i in 0..n {
                assert!((a[i] - b[i]).abs() < 1e-12);
            }
            // Reaction: compare with central differences.
            let r = d.other();
            let jac = p.jacobian(r, 5.0, &y).unwrap();
            for j in 0..n {
                let (mut yp, mut ym) = (y.clone(), y.clone());
                yp[j] += 1e-6;
                ym[j] -= 1e-6;
                let (mut fp, mut fm) = (vec![0.0; n], vec![0.0; n]);
                p.eval(r, 5.0, &yp, &mut fp);
                p.eval(r, 5.0, &ym, &mut fm);
                for i in 0..n {
                    assert!((jac.get(i, j) - (fp[i] - fm[i]) / 2e-6).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn uniform_state_is_steady_under_diffusion() {
        let p = small(Some(4));
        let y: Vec<f64> = (0..p.dim()).map(|i| if i % 2 == 0 { 0.4 } else { -0.2 }).collect();
        let mut out = vec![1.0; p.dim()];
        p.diffusion(&y, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn zero_diffusion_decouples_nodes() {
        let cfg = RdFhnConfig {
            nx: 5,
            diffusion: 0.0,
            t_end: 2.0,
            stimulus: Some(StimulusSpec { indices: (0, 0), window: (0.0, 1.0), amplitude: 1.0 }),
            ..RdFhnConfig::default()
        };
        let p = make_rd_fhn(cfg.clone(), OperatorOrdering::RD).unwrap();
        let strang = lookup("strang").unwrap();
        let plan = SubIntegratorPlan::new(ButcherTableau::sdirk23(), ButcherTableau::sdirk23());
        let traj = integrate(&p, &strang, &plan, 0.0, 2.0, 1e-3, &IntegrateOptions::default()).unwrap();
        let (_, y) = traj.last().unwrap();
        // Unstimulated nodes stay at rest; the stimulated one follows the ODE.
        for node in 1..5 {
            assert_eq!(y[2 * node], 0.0);
        }
        assert!(y[0] != 0.0);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = RdFhnConfig::default();
        let back = RdFhnConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let other = RdFhnConfig { nx: 101, ..cfg.clone() };
        assert_ne!(other.hash(), cfg.hash());
        assert!(RdFhnConfig::parse("nx ten").is_err());
        assert!(RdFhnConfig::parse("color red").is_err());
    }

    #[test]
    fn invalid_grids() {
        let cfg = RdFhnConfig { nx: 2, ..RdFhnConfig::default() };
        assert!(make_rd_fhn(cfg, OperatorOrdering::DR).is_err());
        let cfg = RdFhnConfig { dx: 0.0, ..RdFhnConfig::default() };
        assert!(make_rd_fhn(cfg, OperatorOrdering::DR).is_err());
    }

    #[test]
    fn rest_state_stiff_eigenvalue() {
        let p = make_rd_fhn(RdFhnConfig::default(), OperatorOrdering::DR).unwrap();
        let [l1, l2] = p.reaction_block_eigenvalues(0.0);
        let most_negative = l1.re.min(l2.re);
        assert!((most_negative + 1260.0).abs() < 2.0, "{most_negative}");
    }
}
