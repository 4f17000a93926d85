//! Derivative-free simplex descent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_evals: usize,
    /// Stop when every vertex is within `xtol` (max-norm) of the best one...
    pub xtol: f64,
    /// ...and the objective spread is below `ftol * (1 + |f_best|)`.
    pub ftol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_evals: 2000,
            xtol: 1e-12,
            ftol: 1e-14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Nelder–Mead with the standard coefficients. Infinite objective values are
/// allowed and simply rank worst.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: f64, opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    if n == 0 {
        let fx = eval(x0, &mut evals);
        return SimplexResult { x: Vec::new(), f: fx, evals };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0, &mut evals)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect()
    };

    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_x, best_f) = (&simplex[0].0, simplex[0].1);
        let worst_f = simplex[n].1;
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best_x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread_x <= opts.xtol && (worst_f - best_f).abs() <= opts.ftol * (1.0 + best_f.abs()) {
            break;
        }
        if spread_x <= opts.xtol * 1e-3 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let xr = point(&centroid, &worst, -1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = point(&centroid, &worst, -2.0);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = point(&centroid, &xr, 0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, 0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            v.0 = point(&best, &v.0, 0.5);
            v.1 = eval(&v.0, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult { x, f: fx, evals }
}
