//! Numerical certificate that no two-stage method is third order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::order::residuals_123;
use crate::linalg::solve_dense;

/// The five third-order conditions for `x = (a1, a2, b1, b2)`.
pub fn two_stage_residuals(x: [f64; 4]) -> [f64; 5] {
    residuals_123(&x[..2], &x[2..])
}

fn jacobian(x: [f64; 4]) -> [[f64; 4]; 5] {
    const H: f64 = 1e-30;
    let mut jac = [[0.0; 4]; 5];
    for j in 0..4 {
        let mut xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        xc[j].im = H;
        let r = residuals_123(&xc[..2], &xc[2..]);
        for i in 0..5 {
            jac[i][j] = r[i].im / H;
        }
    }
    jac
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Outcome of the multi-start search.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageSearch {
    pub starts: usize,
    /// Smallest residual norm reached by any start.
    pub best_residual: f64,
    pub best_point: [f64; 4],
    /// Starts that reached a residual norm below the threshold.
    pub converged: usize,
}

/// Levenberg–Marquardt least squares on the overdetermined 5x4 system from
/// `starts` uniform random points in `[-2, 2]^4`.
pub fn two_stage_search(starts: usize, seed: u64, threshold: f64) -> TwoStageSearch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = TwoStageSearch {
        starts,
        best_residual: f64::INFINITY,
        best_point: [0.0; 4],
        converged: 0,
    };
    for _ in 0..starts {
        let mut x: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let mut r = two_stage_residuals(x);
        let mut f = norm(&r);
        let mut mu = 1e-3;
        for _ in 0..100 {
            let jac = jacobian(x);
            let mut jtj = [0.0; 16];
            let mut jtr = [0.0; 4];
            for i in 0..4 {
                for j in 0..4 {
                    jtj[i * 4 + j] = (0..5).map(|k| jac[k][i] * jac[k][j]).sum();
                }
                jtr[i] = -(0..5).map(|k| jac[k][i] * r[k]).sum::<f64>();
            }
            let mut improved = false;
            for _ in 0..20 {
                let mut a = jtj;
                for i in 0..4 {
                    a[i * 4 + i] += mu * (1.0 + jtj[i * 4 + i]);
                }
                let mut step = jtr;
                if solve_dense(&mut a, 4, &mut step).is_err() {
                    mu *= 10.0;
                    continue;
                }
                let trial: [f64; 4] = std::array::from_fn(|i| x[i] + step[i]);
                let rt = two_stage_residuals(trial);
                let ft = norm(&rt);
                if ft < f {
                    x = trial;
                    r = rt;
                    f = ft;
                    mu = (mu * 0.3).max(1e-12);
                    improved = true;
                    break;
                }
                mu *= 10.0;
            }
            if !improved || f < 1e-14 {
                break;
            }
        }
        if f < threshold {
            best.converged += 1;
        }
        if f < best.best_residual {
            best.best_residual = f;
            best.best_point = x;
        }
    }
    best
}
