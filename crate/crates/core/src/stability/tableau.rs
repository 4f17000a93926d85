use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, PoleError, Result};

/// Structure of a tableau's coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableauKind {
    Explicit,
    DiagonallyImplicit,
    /// Stand-in for the exact sub-flow of a linear operator; stability function `exp(z)`.
    ExactFlow,
}

/// Butcher tableau of a one-step Runge–Kutta method with lower-triangular `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: String,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    kind: TableauKind,
    order: u32,
}

/// Treat `1 - z a_ii` as zero below this magnitude.
const POLE_EPS: f64 = 4.0 * f64::EPSILON;

impl ButcherTableau {
    pub fn new(
        name: impl Into<String>,
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: Vec<f64>,
        order: u32,
    ) -> Result<Self> {
        let name = name.into();
        let s = b.len();
        if s == 0 || a.len() != s || c.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::input(format!("tableau {name}: A, b, c sizes disagree")));
        }
        if a.iter().flatten().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::input(format!("tableau {name}: entries must be finite")));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i + 1..].iter().any(|&v| v != 0.0) {
                return Err(Error::input(format!(
                    "tableau {name}: A must be lower triangular (row {})",
                    i + 1
                )));
            }
        }
        let kind = if (0..s).any(|i| a[i][i] != 0.0) {
            TableauKind::DiagonallyImplicit
        } else {
            TableauKind::Explicit
        };
        Ok(ButcherTableau {
            name,
            a,
            b,
            c,
            kind,
            order,
        })
    }

    pub fn forward_euler() -> Self {
        Self::new("fe", vec![vec![0.0]], vec![1.0], vec![0.0], 1).unwrap()
    }

    pub fn heun() -> Self {
        Self::new(
            "heun",
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
            2,
        )
        .unwrap()
    }

    /// Kutta's third-order method.
    pub fn rk3() -> Self {
        Self::new(
            "rk3",
            vec![
                vec![0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0],
                vec![-1.0, 2.0, 0.0],
            ],
            vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 1.0],
            3,
        )
        .unwrap()
    }

    /// Two-stage, third-order SDIRK with `gamma = (3 + sqrt 3) / 6`.
    pub fn sdirk23() -> Self {
        let g = Self::SDIRK23_GAMMA;
        Self::new(
            "sdirk23",
            vec![vec![g, 0.0], vec![1.0 - 2.0 * g, g]],
            vec![0.5, 0.5],
            vec![g, 1.0 - g],
            3,
        )
        .unwrap()
    }

    pub const SDIRK23_GAMMA: f64 = 0.788_675_134_594_812_9;

    /// Exact sub-flow marker (only usable with problems that provide flows).
    pub fn exact_flow() -> Self {
        ButcherTableau {
            name: "exact".into(),
            a: vec![],
            b: vec![],
            c: vec![],
            kind: TableauKind::ExactFlow,
            order: u32::MAX,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 5] = ["fe", "heun", "rk3", "sdirk23", "exact"];

    pub fn by_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "fe" | "euler" | "forward-euler" => Ok(Self::forward_euler()),
            "heun" => Ok(Self::heun()),
            "rk3" | "kutta" => Ok(Self::rk3()),
            "sdirk23" | "sdirk(2,3)" | "sdirk" => Ok(Self::sdirk23()),
            "exact" => Ok(Self::exact_flow()),
            other => Err(Error::input(format!(
                "unknown tableau {other:?}; available: {}",
                Self::BUILTIN_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> TableauKind {
        self.kind
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == TableauKind::Explicit
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Nonzero diagonal entries; the poles of `R` are their reciprocals.
    pub fn diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.stages()).map(|i| self.a[i][i]).filter(|&d| d != 0.0)
    }

    /// Poles of `R(z)` (all real for diagonally implicit tableaus).
    pub fn poles(&self) -> Vec<f64> {
        self.diagonal().map(|d| 1.0 / d).collect()
    }

    /// `R(z) = 1 + z b^T (I - zA)^{-1} 1`, by forward substitution.
    pub fn stability(&self, z: Complex64) -> std::result::Result<Complex64, PoleError> {
        if self.kind == TableauKind::ExactFlow {
            return Ok(z.exp());
        }
        let s = self.stages();
        let mut k = [Complex64::new(0.0, 0.0); 8];
        let mut heap;
        let k: &mut [Complex64] = if s <= 8 {
            &mut k[..s]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); s];
            &mut heap
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..s {
            let mut rhs = Complex64::new(1.0, 0.0);
            for j in 0..i {
                rhs += z * self.a[i][j] * k[j];
            }
            let denom = Complex64::new(1.0, 0.0) - z * self.a[i][i];
            if denom.norm() <= POLE_EPS {
                return Err(PoleError {
                    z,
                    stage: None,
                    operator: None,
                });
            }
            k[i] = rhs / denom;
            acc += self.b[i] * k[i];
        }
        Ok(Complex64::new(1.0, 0.0) + z * acc)
    }

    /// Real-argument fast path of [`Self::stability`]; `None` at a pole.
    pub fn stability_real(&self, x: f64) -> Option<f64> {
        if self.kind == TableauKind::ExactFlow {
            return Some(x.exp());
        }
        let s = self.stages();
        let mut k = [0.0; 8];
        let mut heap;
        let k: &mut [f64] = if s <= 8 {
            &mut k[..s]
        } else {
            heap = vec![0.0; s];
            &mut heap
        };
        let mut acc = 0.0;
        for i in 0..s {
            let mut rhs = 1.0;
            for j in 0..i {
                rhs += x * self.a[i][j] * k[j];
            }
            let denom = 1.0 - x * self.a[i][i];
            if denom.abs() <= POLE_EPS {
                return None;
            }
            k[i] = rhs / denom;
            acc += self.b[i] * k[i];
        }
        Some(1.0 + x * acc)
    }
}

impl fmt::Display for ButcherTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Free-function form of [`ButcherTableau::stability`].
pub fn rk_stability(tab: &ButcherTableau, z: Complex64) -> std::result::Result<Complex64, PoleError> {
    tab.stability(z)
}
