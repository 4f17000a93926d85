//! Elimination of the five conditions of orders 1..=3.

use num_complex::Complex64;

use super::DesignSpec;
use crate::linalg::solve_dense;
use crate::methods::order::residuals_123;
use crate::methods::Operator;

pub const MANIFOLD_MAX_ITERS: usize = 50;
pub const MANIFOLD_TOL: f64 = 1e-12;
const COMPLEX_STEP: f64 = 1e-30;

/// Which coefficient positions are free and which are solved for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateLayout {
    pub stages: usize,
    /// 0-based `(stage, operator index)` of every non-forced-zero coefficient,
    /// column-major.
    pub positions: Vec<(usize, usize)>,
}

impl CoordinateLayout {
    pub fn new(spec: &DesignSpec) -> Self {
        let s = spec.stages;
        let positions = (0..2)
            .flat_map(|l| (0..s).map(move |k| (k, l)))
            .filter(|&(k, l)| !spec.is_forced_zero(k + 1, Operator::BOTH[l]))
            .collect();
        CoordinateLayout { stages: s, positions }
    }

    pub fn free_count(&self) -> usize {
        self.positions.len() - 5
    }

    pub fn free_positions(&self) -> &[(usize, usize)] {
        &self.positions[..self.free_count()]
    }

    /// The last five positions in column-major order.
    pub fn dependent_positions(&self) -> &[(usize, usize)] {
        &self.positions[self.free_count()..]
    }

    pub fn assemble<T: Copy + Default>(&self, free: &[T], dependent: &[T]) -> (Vec<T>, Vec<T>) {
        let mut cols = [vec![T::default(); self.stages], vec![T::default(); self.stages]];
        for (&(k, l), &v) in self.positions.iter().zip(free.iter().chain(dependent)) {
            cols[l][k] = v;
        }
        let [a, b] = cols;
        (a, b)
    }

    pub fn split(&self, rows: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
        let vals: Vec<f64> = self.positions.iter().map(|&(k, l)| rows[k][l]).collect();
        let nf = self.free_count();
        (vals[..nf].to_vec(), vals[nf..].to_vec())
    }

    pub fn rows(&self, free: &[f64], dependent: &[f64]) -> Vec<[f64; 2]> {
        let (a, b) = self.assemble(free, dependent);
        a.into_iter().zip(b).map(|(x, y)| [x, y]).collect()
    }
}

/// Residual vector of orders 1..=3 at the assembled point.
pub fn manifold_residuals(layout: &CoordinateLayout, free: &[f64], dependent: &[f64]) -> [f64; 5] {
    let (a, b) = layout.assemble(free, dependent);
    residuals_123(&a, &b)
}

/// Newton's method for the five dependent coefficients, started from `guess`.
/// Returns the full coefficient rows, or `None` on non-convergence or a
/// singular Jacobian.
pub fn solve_order_manifold(free: &[f64], spec: &DesignSpec, guess: &[f64]) -> Option<Vec<[f64; 2]>> {
    let layout = CoordinateLayout::new(spec);
    solve_with_layout(&layout, free, guess).map(|dep| layout.rows(free, &dep))
}

pub(crate) fn solve_with_layout(layout: &CoordinateLayout, free: &[f64], guess: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(free.len(), layout.free_count());
    assert_eq!(guess.len(), 5);
    let free_c: Vec<Complex64> = free.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut x = guess.to_vec();
    for _ in 0..=MANIFOLD_MAX_ITERS {
        let r = manifold_residuals(layout, free, &x);
        let norm = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() {
            return None;
        }
        if norm <= MANIFOLD_TOL {
            return Some(x);
        }
        let mut jac = [0.0; 25];
        for j in 0..5 {
            let mut xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            xc[j].im = COMPLEX_STEP;
            let (a, b) = layout.assemble(&free_c, &xc);
            let rc = residuals_123(&a, &b);
            for i in 0..5 {
                jac[i * 5 + j] = rc[i].im / COMPLEX_STEP;
            }
        }
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        solve_dense(&mut jac, 5, &mut rhs).ok()?;
        for (xi, d) in x.iter_mut().zip(&rhs) {
            *xi += d;
        }
    }
    None
}
