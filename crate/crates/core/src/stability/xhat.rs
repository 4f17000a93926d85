use super::StabilityContext;
use crate::error::{Error, Result};

pub const DEFAULT_SCAN_DEPTH: f64 = 50.0;
const DEFAULT_POINTS: usize = 100_000;
const BISECTION_WIDTH: f64 = 1e-12;

/// How densely the negative real axis is scanned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// The scan covers `[-depth, 0)`.
    pub depth: f64,
    pub points: usize,
    /// Share of points spaced geometrically over `depth * [1e-10, 1e-2]`;
    /// the rest are uniform over `depth * [1e-2, 1]`.
    pub geometric_fraction: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            depth: DEFAULT_SCAN_DEPTH,
            points: DEFAULT_POINTS,
            geometric_fraction: 0.1,
        }
    }
}

impl ScanOptions {
    pub fn with_depth(depth: f64) -> Self {
        ScanOptions {
            depth,
            ..Self::default()
        }
    }

    /// A cheaper scan, used inside optimization loops.
    pub fn coarse(depth: f64) -> Self {
        ScanOptions {
            depth,
            points: 4000,
            geometric_fraction: 0.1,
        }
    }

    /// Scan abscissae `|x|` in increasing order.
    fn grid(&self) -> Vec<f64> {
        let ng = ((self.points as f64 * self.geometric_fraction) as usize).max(2);
        let nu = self.points.saturating_sub(ng).max(2);
        let (g0, g1) = (self.depth * 1e-10, self.depth * 1e-2);
        let ratio = (g1 / g0).powf(1.0 / (ng - 1) as f64);
        let mut out: Vec<f64> = (0..ng).map(|i| g0 * ratio.powi(i as i32)).collect();
        let step = (self.depth - g1) / nu as f64;
        out.extend((1..=nu).map(|i| g1 + step * i as f64));
        out
    }
}

/// Right-most negative real intercept of `|R| = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XHatResult {
    /// `None` when `|R| <= 1` over the whole scanned interval.
    pub xhat: Option<f64>,
    /// `(lo, hi)` with `|R(lo)| > 1 >= |R(hi)|` and `hi - lo < 1e-12`.
    pub bracket: Option<(f64, f64)>,
    /// The instability left of `xhat` is the flank of a pole.
    pub is_pole_limited: bool,
}

impl XHatResult {
    fn none() -> Self {
        XHatResult {
            xhat: None,
            bracket: None,
            is_pole_limited: false,
        }
    }
}

fn g(ctx: &StabilityContext, x: f64) -> f64 {
    match ctx.eval_real(x) {
        Some(r) if r.is_finite() => r.abs() - 1.0,
        _ => f64::INFINITY,
    }
}

fn bisect(ctx: &StabilityContext, mut lo: f64, mut hi: f64) -> (f64, f64) {
    // Invariant: g(lo) > 0 >= g(hi), lo < hi.
    while hi - lo >= BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(ctx, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

fn pole_limited(ctx: &StabilityContext, lo: f64, poles: &[f64]) -> bool {
    match poles.iter().copied().filter(|&p| p < lo).fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p)))) {
        Some(p) => (1..=32).all(|i| g(ctx, lo + (p - lo) * i as f64 / 33.0) > 0.0),
        None => false,
    }
}

/// `x_hat` with the default scan density over `[-scan_depth, 0)`.
pub fn find_xhat(ctx: &StabilityContext, scan_depth: f64) -> Result<XHatResult> {
    find_xhat_with(ctx, &ScanOptions::with_depth(scan_depth))
}

/// Scans `g(x) = |R(x)| - 1` leftwards from `0-` and refines the first sign
/// change (or the first pole whose flank is unstable) by bisection.
pub fn find_xhat_with(ctx: &StabilityContext, opts: &ScanOptions) -> Result<XHatResult> {
    if !(opts.depth > 0.0 && opts.depth.is_finite()) {
        return Err(Error::input(format!("scan depth must be positive, got {}", opts.depth)));
    }
    if opts.points < 4 {
        return Err(Error::input("scan needs at least 4 points"));
    }
    let mut poles: Vec<f64> = ctx.poles().into_iter().filter(|&p| p < 0.0 && p >= -opts.depth).collect();
    poles.sort_by(|a, b| b.total_cmp(a));
    let mut next_pole = poles.iter().copied().peekable();

    let mut x_prev = 0.0;
    for ax in opts.grid() {
        let x = -ax;
        while let Some(&p) = next_pole.peek() {
            if p < x {
                break;
            }
            next_pole.next();
            // Pole in [x, x_prev): its right flank is unstable unless the pole cancels.
            let eps = (p.abs() * 1e-9).min(0.5 * (x_prev - p));
            let xr = p + eps;
            if g(ctx, xr) > 0.0 {
                let (lo, hi) = bisect(ctx, xr, x_prev);
                return Ok(XHatResult {
                    xhat: Some(0.5 * (lo + hi)),
                    bracket: Some((lo, hi)),
                    is_pole_limited: true,
                });
            }
            let xl = p - p.abs() * 1e-9;
            if g(ctx, xl) > 0.0 {
                return Ok(XHatResult {
                    xhat: Some(p),
                    bracket: Some((xl, xr)),
                    is_pole_limited: true,
                });
            }
        }
        if g(ctx, x) > 0.0 {
            let (lo, hi) = bisect(ctx, x, x_prev);
            return Ok(XHatResult {
                xhat: Some(0.5 * (lo + hi)),
                bracket: Some((lo, hi)),
                is_pole_limited: pole_limited(ctx, lo, &poles),
            });
        }
        x_prev = x;
    }
    Ok(XHatResult::none())
}

/// `[x_hat, 0]`, or `None` if stable over the whole scan.
pub fn practical_interval(ctx: &StabilityContext, scan_depth: f64) -> Result<Option<(f64, f64)>> {
    Ok(find_xhat(ctx, scan_depth)?.xhat.map(|x| (x, 0.0)))
}
