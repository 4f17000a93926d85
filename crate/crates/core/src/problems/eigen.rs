use crate::error::{Error, Result};
use crate::integrators::SplitProblem;

use super::fhn::RdFhn;

const POWER_MAX_ITERS: usize = 20_000;
const POWER_RTOL: f64 = 1e-12;
/// Accepted relative eigen-residual `|A v - mu v| / |mu|` once the Rayleigh
/// quotient has settled.
const POWER_RESIDUAL_TOL: f64 = 1e-3;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Most negative eigenvalue of a symmetric negative semidefinite operator,
/// by power iteration started from `start`.
pub fn most_negative_symmetric<F>(matvec: F, start: &[f64]) -> Result<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = start.len();
    let mut v = start.to_vec();
    let s = norm(&v);
    if s == 0.0 {
        return Err(Error::input("power iteration needs a nonzero start vector"));
    }
    v.iter_mut().for_each(|x| *x /= s);
    let mut av = vec![0.0; n];
    let mut mu_prev = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        matvec(&v, &mut av);
        // Rayleigh quotient of A (v is unit length).
        let mu: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        let scale = norm(&av);
        if scale == 0.0 {
            return Ok(0.0);
        }
        residual = v.iter().zip(&av).map(|(a, b)| (b - mu * a).powi(2)).sum::<f64>().sqrt() / mu.abs().max(f64::MIN_POSITIVE);
        let settled = residual <= POWER_RTOL || (mu - mu_prev).abs() <= POWER_RTOL * mu.abs();
        if settled && residual <= POWER_RESIDUAL_TOL {
            return Ok(mu);
        }
        mu_prev = mu;
        // All eigenvalues share a sign, so iterating with A itself converges to
        // the largest magnitude without sign alternation.
        for (x, y) in v.iter_mut().zip(&av) {
            *x = y / scale;
        }
    }
    Err(Error::Estimation { residual })
}

/// `(lambda_D, lambda_R)`: most negative eigenvalues of the diffusion matrix and
/// of the pointwise reaction Jacobians over the given states.
pub fn estimate_extreme_eigenvalues(p: &RdFhn, states: &[Vec<f64>]) -> Result<(f64, f64)> {
    let d = p.diffusion_operator();
    let n = p.dim();
    let nx = p.config.nx;
    // Highest-frequency checkerboard in v, zero in w.
    let start: Vec<f64> = (0..n)
        .map(|i| {
            if i % 2 == 1 {
                0.0
            } else {
                let node = i / 2;
                if (node % nx + node / nx) % 2 == 0 { 1.0 } else { -1.0 }
            }
        })
        .collect();
    let lambda_d = if p.config.diffusion == 0.0 {
        0.0
    } else {
        most_negative_symmetric(|x, out| p.eval(d, 0.0, x, out), &start)?
    };
    let mut lambda_r = f64::INFINITY;
    let rest = p.initial_state();
    for y in states.iter().chain(std::iter::once(&rest)) {
        for node in 0..p.nodes() {
            for l in p.reaction_block_eigenvalues(y[2 * node]) {
                lambda_r = lambda_r.min(l.re);
            }
        }
    }
    Ok((lambda_d, lambda_r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fhn::{make_rd_fhn, RdFhnConfig};
    use crate::stability::OperatorOrdering;

    fn dirichlet_laplacian(n: usize, d: f64, h: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |x, out| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                out[i] = d / (h * h) * (l - 2.0 * x[i] + r);
            }
        }
    }

    #[test]
    fn dirichlet_spectrum() {
        let (d, h) = (0.5, 0.1);
        for n in [10usize, 40, 100] {
            let start: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let lambda = most_negative_symmetric(dirichlet_laplacian(n, d, h), &start).unwrap();
            let s = (n as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0))).sin();
            let exact = -4.0 * d / (h * h) * s * s;
            assert!((lambda - exact).abs() < 1e-8 * exact.abs(), "{n}: {lambda} vs {exact}");
            assert!(lambda > -4.0 * d / (h * h));
        }
    }

    #[test]
    fn fhn_default_eigenvalues() {
        let p = make_rd_fhn(RdFhnConfig::default(), OperatorOrdering::DR).unwrap();
        let (ld, lr) = estimate_extreme_eigenvalues(&p, &[]).unwrap();
        // Neumann checkerboard is an exact eigenvector: -4 D / dx^2.
        assert!((ld + 1.92).abs() < 1e-10, "{ld}");
        let [a, b] = p.reaction_block_eigenvalues(0.0);
        assert_eq!(lr, a.re.min(b.re));
        // Closed-form quadratic at rest.
        let f = &p.config.fhn;
        let (tr, det) = (-f.k * f.a - f.eps * f.gamma, f.k * f.a * f.eps * f.gamma + f.eps);
        let expected = (tr - (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert!((lr - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn zero_diffusion() {
        let cfg = RdFhnConfig { diffusion: 0.0, nx: 11, ..RdFhnConfig::default() };
        let p = make_rd_fhn(cfg, OperatorOrdering::RD).unwrap();
        assert_eq!(estimate_extreme_eigenvalues(&p, &[]).unwrap().0, 0.0);
    }

    #[test]
    fn two_dimensional_bound() {
        let cfg = RdFhnConfig { nx: 9, ny: Some(9), stimulus: None, ..RdFhnConfig::default() };
        let p = make_rd_fhn(cfg, OperatorOrdering::DR).unwrap();
        let (ld, _) = estimate_extreme_eigenvalues(&p, &[]).unwrap();
        assert!((ld + 3.84).abs() < 1e-10, "{ld}");
    }

    #[test]
    fn zero_start_is_rejected() {
        assert!(most_negative_symmetric(|x, o| o.copy_from_slice(x), &[0.0, 0.0]).is_err());
    }
}
