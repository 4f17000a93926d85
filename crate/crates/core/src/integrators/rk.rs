use super::VectorField;
use crate::error::{Error, Result, StepFailure};
use crate::linalg::{BandLu, BandMatrix};
use crate::stability::{ButcherTableau, TableauKind};

/// Newton stops when the max-norm stage residual is below `NEWTON_RTOL * (1 + |y|)`.
pub const NEWTON_RTOL: f64 = 1e-12;
pub const NEWTON_MAX_ITERS: usize = 25;
const FD_REL_STEP: f64 = 1e-7;

/// Work done by one Runge–Kutta step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RkStats {
    pub f_evals: usize,
    pub jac_evals: usize,
    pub newton_iters: usize,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian, using column grouping when banded.
fn fd_jacobian<F: VectorField + ?Sized>(
    f: &F,
    t: f64,
    y: &[f64],
    fy: &[f64],
    stats: &mut RkStats,
) -> BandMatrix {
    let n = y.len();
    let (kl, ku) = f.bandwidth().unwrap_or((n.saturating_sub(1), n.saturating_sub(1)));
    let mut jac = BandMatrix::zeros(n, kl, ku);
    let (kl, ku) = (jac.lower(), jac.upper());
    let groups = (kl + ku + 1).min(n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for g in 0..groups {
        let cols: Vec<usize> = (g..n).step_by(groups).collect();
        let deltas: Vec<f64> = cols.iter().map(|&j| FD_REL_STEP * y[j].abs().max(1.0)).collect();
        for (&j, &d) in cols.iter().zip(&deltas) {
            yp[j] = y[j] + d;
        }
        f.eval(t, &yp, &mut fp);
        stats.f_evals += 1;
        for (&j, &d) in cols.iter().zip(&deltas) {
            yp[j] = y[j];
            let d = (y[j] + d) - y[j];
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                jac.set(i, j, (fp[i] - fy[i]) / d);
            }
        }
    }
    jac
}

/// One Runge–Kutta step of size `h` (which may be negative).
///
/// Diagonally implicit stages are solved by Newton's method started from `y`.
/// The analytic Jacobian is used when the field provides one; otherwise it is
/// finite-differenced. Linear fields reuse a single factorization.
pub fn rk_step<F: VectorField + ?Sized>(
    f: &F,
    t: f64,
    y: &[f64],
    h: f64,
    tab: &ButcherTableau,
) -> Result<(Vec<f64>, RkStats)> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::input(format!("step size must be finite and nonzero, got {h}")));
    }
    let n = y.len();
    let mut stats = RkStats::default();
    if tab.kind() == TableauKind::ExactFlow {
        let mut out = vec![0.0; n];
        if !f.exact_flow(t, y, h, &mut out) {
            return Err(Error::input("exact sub-flows are not available for this operator"));
        }
        return Ok((out, stats));
    }

    let s = tab.stages();
    let mut k = vec![vec![0.0; n]; s];
    let mut base = vec![0.0; n];
    let tol = NEWTON_RTOL * (1.0 + max_norm(y));
    let mut cached: Option<(f64, BandLu)> = None;

    for i in 0..s {
        base.copy_from_slice(y);
        for j in 0..i {
            let w = h * tab.a(i, j);
            if w != 0.0 {
                for (b, kj) in base.iter_mut().zip(&k[j]) {
                    *b += w * kj;
                }
            }
        }
        let ti = t + tab.c()[i] * h;
        let d = tab.a(i, i);
        if d == 0.0 {
            f.eval(ti, &base, &mut k[i]);
            stats.f_evals += 1;
            continue;
        }

        let hd = h * d;
        let mut stage = y.to_vec();
        let mut fy = vec![0.0; n];
        let mut g = vec![0.0; n];
        let mut iter = 0;
        loop {
            f.eval(ti, &stage, &mut fy);
            stats.f_evals += 1;
            for r in 0..n {
                g[r] = stage[r] - base[r] - hd * fy[r];
            }
            let res = max_norm(&g);
            if res <= tol {
                break;
            }
            let failure = StepFailure {
                stage: i + 1,
                iterations: iter,
                residual: res,
            };
            if iter == NEWTON_MAX_ITERS || !res.is_finite() {
                return Err(failure.into());
            }
            let reuse = f.is_linear() && matches!(&cached, Some((key, _)) if *key == hd);
            if !reuse {
                let mut m = match f.jacobian(ti, &stage) {
                    Some(jac) => {
                        stats.jac_evals += 1;
                        jac
                    }
                    None => fd_jacobian(f, ti, &stage, &fy, &mut stats),
                };
                let scale = 1.0 + hd.abs() * m.max_abs();
                m.scale_add_identity(-hd, 1.0);
                cached = Some((hd, m.factor_scaled(scale).map_err(|_| failure)?));
            }
            let lu = &cached.as_ref().unwrap().1;
            for v in g.iter_mut() {
                *v = -*v;
            }
            lu.solve(&mut g);
            for (s, dv) in stage.iter_mut().zip(&g) {
                *s += dv;
            }
            iter += 1;
            stats.newton_iters += 1;
        }
        k[i].copy_from_slice(&fy);
    }

    let mut out = y.to_vec();
    for (i, ki) in k.iter().enumerate() {
        let w = h * tab.b()[i];
        for (o, kv) in out.iter_mut().zip(ki) {
            *o += w * kv;
        }
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    /// `y' = lambda y` with an evaluation counter.
    struct Linear {
        lambda: f64,
        evals: Cell<usize>,
        analytic: bool,
    }

    impl Linear {
        fn new(lambda: f64, analytic: bool) -> Self {
            Linear { lambda, evals: Cell::new(0), analytic }
        }
    }

    impl VectorField for Linear {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            self.evals.set(self.evals.get() + 1);
            out[0] = self.lambda * y[0];
        }
        fn jacobian(&self, _t: f64, _y: &[f64]) -> Option<BandMatrix> {
            self.analytic.then(|| {
                let mut m = BandMatrix::dense(1);
                m.set(0, 0, self.lambda);
                m
            })
        }
    }

    /// Stiff nonlinear scalar `y' = -y^3 - 10 y`.
    struct Cubic;
    impl VectorField for Cubic {
        fn dim(&self) -> usize {
            1
        }
        fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            out[0] = -y[0].powi(3) - 10.0 * y[0];
        }
    }

    fn sdirk_closed_form(z: f64) -> f64 {
        let g = ButcherTableau::SDIRK23_GAMMA;
        let d = g * z - 1.0;
        1.0 - z * z * (2.0 * g - 1.0) / (2.0 * d * d) - z / d
    }

    #[test]
    fn forward_euler_amplification() {
        let f = Linear::new(-3.0, false);
        let (y, stats) = rk_step(&f, 0.0, &[2.0], 0.1, &ButcherTableau::forward_euler()).unwrap();
        assert!((y[0] - 2.0 * 0.7).abs() < 1e-15);
        assert_eq!(stats.f_evals, 1);
    }

    #[test]
    fn rk3_amplification() {
        let f = Linear::new(-2.0, false);
        let h = 0.35;
        let z = -2.0 * h;
        let (y, stats) = rk_step(&f, 0.0, &[1.0], h, &ButcherTableau::rk3()).unwrap();
        assert!((y[0] - (1.0 + z + z * z / 2.0 + z * z * z / 6.0)).abs() < 1e-15);
        assert_eq!(stats.f_evals, 3);
        assert_eq!(f.evals.get(), 3);
    }

    #[test]
    fn sdirk_amplification_matches_closed_form() {
        for (lambda, h) in [(-3.0, 0.5), (-1260.0, 0.01), (2.0, -0.3), (-5.0, -0.1)] {
            for analytic in [true, false] {
                let f = Linear::new(lambda, analytic);
                let (y, _) = rk_step(&f, 0.0, &[1.0], h, &ButcherTableau::sdirk23()).unwrap();
                let e = sdirk_closed_form(lambda * h);
                assert!((y[0] - e).abs() < 1e-13 * (1.0 + e.abs()), "{lambda} {h}: {} vs {e}", y[0]);
            }
        }
    }

    #[test]
    fn nonlinear_implicit_stage_converges() {
        let (y, stats) = rk_step(&Cubic, 0.0, &[1.0], 0.5, &ButcherTableau::sdirk23()).unwrap();
        // SDIRK(2,3) is not L-stable, so the sign may flip at this step size.
        assert!(y[0].is_finite() && y[0].abs() < 1.0);
        assert!(stats.newton_iters >= 2 && stats.newton_iters <= 2 * NEWTON_MAX_ITERS);
    }

    #[test]
    fn newton_failure_reports_stage() {
        // Poles make I - h*gamma*J singular.
        let lambda = 1.0 / (0.1 * ButcherTableau::SDIRK23_GAMMA);
        let f = Linear::new(lambda, true);
        match rk_step(&f, 0.0, &[1.0], 0.1, &ButcherTableau::sdirk23()) {
            Err(Error::Step(StepFailure { stage, .. })) => assert_eq!(stage, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_step_is_rejected() {
        let f = Linear::new(1.0, false);
        assert!(rk_step(&f, 0.0, &[1.0], 0.0, &ButcherTableau::rk3()).is_err());
    }

    #[test]
    fn exact_flow_requires_support() {
        let f = Linear::new(1.0, false);
        assert!(rk_step(&f, 0.0, &[1.0], 0.1, &ButcherTableau::exact_flow()).is_err());
    }

    struct Tridiag;
    impl VectorField for Tridiag {
        fn dim(&self) -> usize {
            6
        }
        fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
            for i in 0..6 {
                let l = if i > 0 { y[i - 1] } else { 0.0 };
                let r = if i < 5 { y[i + 1] } else { 0.0 };
                out[i] = l - 2.0 * y[i] + r + 0.1 * y[i] * y[i];
            }
        }
        fn bandwidth(&self) -> Option<(usize, usize)> {
            Some((1, 1))
        }
    }

    #[test]
    fn banded_fd_jacobian_matches_dense() {
        let y = [0.3, -0.2, 0.5, 1.0, -0.7, 0.1];
        let mut fy = [0.0; 6];
        Tridiag.eval(0.0, &y, &mut fy);
        let mut stats = RkStats::default();
        let jac = fd_jacobian(&Tridiag, 0.0, &y, &fy, &mut stats);
        assert_eq!(stats.f_evals, 3);
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j {
                    -2.0 + 0.2 * y[i]
                } else if i.abs_diff(j) == 1 {
                    1.0
                } else {
                    0.0
                };
                assert!((jac.get(i, j) - e).abs() < 1e-6, "({i},{j})");
            }
        }
    }
}
