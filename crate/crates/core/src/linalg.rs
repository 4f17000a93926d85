//! Small dense and banded linear solvers for the implicit stage equations.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularMatrix {
    pub column: usize,
}

impl fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "matrix is singular at column {}", self.column)
    }
}

impl std::error::Error for SingularMatrix {}

/// Solves `a x = b` in place (row-major `n x n`) by Gaussian elimination with
/// partial pivoting. `a` is destroyed; `b` receives `x`.
pub fn solve_dense(a: &mut [f64], n: usize, b: &mut [f64]) -> Result<(), SingularMatrix> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
            .unwrap();
        if a[p * n + k].abs() <= f64::EPSILON * scale * n as f64 || a[p * n + k] == 0.0 {
            return Err(SingularMatrix { column: k });
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let l = a[i * n + k] / a[k * n + k];
            if l != 0.0 {
                for j in k + 1..n {
                    a[i * n + j] -= l * a[k * n + j];
                }
                b[i] -= l * b[k];
            }
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i * n + j] * b[j]).sum();
        b[i] = (b[i] - s) / a[i * n + i];
    }
    Ok(())
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Rows keep room
/// for the `kl` extra super-diagonals created by pivoting during LU.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let kl = kl.min(n.saturating_sub(1));
        let ku = ku.min(n.saturating_sub(1));
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    /// A full matrix stored with maximal bandwidth.
    pub fn dense(n: usize) -> Self {
        Self::zeros(n, n.saturating_sub(1), n.saturating_sub(1))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> usize {
        self.kl
    }

    pub fn upper(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            0.0
        }
    }

    /// Panics if `(i, j)` is outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band ({}, {})", self.kl, self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `self <- diag * I + scale * self`.
    pub fn scale_add_identity(&mut self, scale: f64, diag: f64) {
        for v in &mut self.data {
            *v *= scale;
        }
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += diag;
        }
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            out[i] = (lo..=hi).map(|j| self.data[self.idx(i, j)] * x[j]).sum();
        }
    }

    /// LU factorization with partial pivoting (row interchanges limited to the band).
    pub fn factor(self) -> Result<BandLu, SingularMatrix> {
        let scale = self.max_abs();
        self.factor_scaled(scale)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// LU factorization; pivots below `1e-14 * scale` count as singular, so
    /// callers can pass the magnitude of the terms that cancelled.
    pub fn factor_scaled(mut self, scale: f64) -> Result<BandLu, SingularMatrix> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            for i in k + 1..=last_row {
                if self.data[self.idx(i, k)].abs() > self.data[self.idx(p, k)].abs() {
                    p = i;
                }
            }
            pivots[k] = p;
            let piv = self.data[self.idx(p, k)];
            if piv == 0.0 || piv.abs() <= 1e-14 * scale {
                return Err(SingularMatrix { column: k });
            }
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / piv;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                        self.data[ij] -= l * self.data[kj];
                    }
                }
            }
        }
        Ok(BandLu { lu: self, pivots })
    }
}

/// Factorization produced by [`BandMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    pivots: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.lu;
        let n = m.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.idx(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let hi = (i + m.kl + m.ku).min(n - 1);
            let s: f64 = (i + 1..=hi).map(|j| m.data[m.idx(i, j)] * b[j]).sum();
            b[i] = (b[i] - s) / m.data[m.idx(i, i)];
        }
    }
}
