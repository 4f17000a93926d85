//! Linear oracle problems with closed-form solutions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrators::SplitProblem;
use crate::linalg::BandMatrix;
use crate::methods::Operator;

/// `y' = lambda1 y + lambda2 y` for complex scalar `y`, stored as `[Re y, Im y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPair {
    pub lambda: [Complex64; 2],
    pub y0: Complex64,
}

pub fn make_linear_pair(lambda1: Complex64, lambda2: Complex64) -> LinearPair {
    LinearPair {
        lambda: [lambda1, lambda2],
        y0: Complex64::new(1.0, 0.0),
    }
}

impl LinearPair {
    pub fn real(lambda1: f64, lambda2: f64) -> Self {
        make_linear_pair(Complex64::new(lambda1, 0.0), Complex64::new(lambda2, 0.0))
    }

    pub fn to_complex(y: &[f64]) -> Complex64 {
        Complex64::new(y[0], y[1])
    }
}

impl SplitProblem for LinearPair {
    fn label(&self) -> &str {
        "linear-pair"
    }

    fn dim(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Vec<f64> {
        vec![self.y0.re, self.y0.im]
    }

    fn eval(&self, op: Operator, _t: f64, y: &[f64], out: &mut [f64]) {
        let v = self.lambda[op.index()] * Complex64::new(y[0], y[1]);
        out[0] = v.re;
        out[1] = v.im;
    }

    fn jacobian(&self, op: Operator, _t: f64, _y: &[f64]) -> Option<BandMatrix> {
        let l = self.lambda[op.index()];
        let mut m = BandMatrix::dense(2);
        m.set(0, 0, l.re);
        m.set(0, 1, -l.im);
        m.set(1, 0, l.im);
        m.set(1, 1, l.re);
        Some(m)
    }

    fn is_linear(&self, _op: Operator) -> bool {
        true
    }

    fn exact_flow(&self, op: Operator, _t: f64, y: &[f64], h: f64, out: &mut [f64]) -> bool {
        let v = (self.lambda[op.index()] * h).exp() * Complex64::new(y[0], y[1]);
        out[0] = v.re;
        out[1] = v.im;
        true
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let v = ((self.lambda[0] + self.lambda[1]) * t).exp() * self.y0;
        Some(vec![v.re, v.im])
    }
}

/// Row-major dense `n x n` matrix.
pub type Dense = Vec<f64>;

fn matmul(a: &[f64], b: &[f64], n: usize) -> Dense {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik != 0.0 {
                for j in 0..n {
                    c[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    }
    c
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &[f64], n: usize) -> Dense {
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = 0.5f64.powi(squarings);
    let scaled: Dense = a.iter().map(|v| v * scale).collect();
    let mut result: Dense = (0..n * n).map(|k| if k % (n + 1) == 0 { 1.0 } else { 0.0 }).collect();
    let mut term = result.clone();
    for k in 1..=20 {
        term = matmul(&term, &scaled, n);
        for v in term.iter_mut() {
            *v /= k as f64;
        }
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}

fn matvec(a: &[f64], x: &[f64], n: usize, out: &mut [f64]) {
    for i in 0..n {
        out[i] = (0..n).map(|j| a[i * n + j] * x[j]).sum();
    }
}

/// `y' = A1 y + A2 y` with small dense `A1`, `A2` (n <= 4).
#[derive(Debug, Clone, PartialEq)]
pub struct Noncommuting {
    pub n: usize,
    pub a: [Dense; 2],
    pub y0: Vec<f64>,
}

pub fn make_noncommuting(a1: Dense, a2: Dense, y0: Vec<f64>) -> Result<Noncommuting> {
    let n = y0.len();
    if n == 0 || n > 4 {
        return Err(Error::input(format!("noncommuting problems support 1 <= n <= 4, got {n}")));
    }
    if a1.len() != n * n || a2.len() != n * n {
        return Err(Error::input("matrix sizes do not match the initial state"));
    }
    Ok(Noncommuting { n, a: [a1, a2], y0 })
}

impl Noncommuting {
    /// Nilpotent pair `[[0,1],[0,0]]`, `[[0,0],[1,0]]`.
    pub fn nilpotent_pair() -> Self {
        make_noncommuting(vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0], vec![1.0, 0.5]).unwrap()
    }

    /// Non-nilpotent, noncommuting pair used for convergence studies, so
    /// that neither the splitting nor the Runge–Kutta sub-steps are exact.
    pub fn convergence_pair() -> Self {
        make_noncommuting(
            vec![-1.0, 2.0, 0.0, -3.0],
            vec![-2.0, 0.0, 1.5, -0.5],
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    /// Frobenius norm of `A1 A2 - A2 A1`.
    pub fn commutator_norm(&self) -> f64 {
        let ab = matmul(&self.a[0], &self.a[1], self.n);
        let ba = matmul(&self.a[1], &self.a[0], self.n);
        ab.iter().zip(&ba).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }
}

impl SplitProblem for Noncommuting {
    fn label(&self) -> &str {
        "noncommuting"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn initial_state(&self) -> Vec<f64> {
        self.y0.clone()
    }

    fn eval(&self, op: Operator, _t: f64, y: &[f64], out: &mut [f64]) {
        matvec(&self.a[op.index()], y, self.n, out);
    }

    fn jacobian(&self, op: Operator, _t: f64, _y: &[f64]) -> Option<BandMatrix> {
        let mut m = BandMatrix::dense(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.set(i, j, self.a[op.index()][i * self.n + j]);
            }
        }
        Some(m)
    }

    fn is_linear(&self, _op: Operator) -> bool {
        true
    }

    fn exact_flow(&self, op: Operator, _t: f64, y: &[f64], h: f64, out: &mut [f64]) -> bool {
        let ha: Dense = self.a[op.index()].iter().map(|v| v * h).collect();
        matvec(&expm(&ha, self.n), y, self.n, out);
        true
    }

    fn exact(&self, t: f64) -> Option<Vec<f64>> {
        let sum: Dense = self.a[0].iter().zip(&self.a[1]).map(|(x, y)| (x + y) * t).collect();
        let mut out = vec![0.0; self.n];
        matvec(&expm(&sum, self.n), &self.y0, self.n, &mut out);
        Some(out)
    }
}
