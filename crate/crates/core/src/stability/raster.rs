use std::collections::VecDeque;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::{single_var_stability, StabilityContext};
use crate::error::{Error, Result};

/// Rectangle `[x0, x1] x [y0, y1]` of the complex `z` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let w = Window { x0, x1, y0, y1 };
        if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(Error::input(format!("degenerate window {w:?}")));
        }
        Ok(w)
    }
}

/// `|R|` sampled on the nodes of a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionRaster {
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in `y`: entry `j * nx + i` is node `(x_i, y_j)`.
    pub magnitude: Vec<f64>,
    pub inside: Vec<bool>,
    pub pole: Vec<bool>,
}

/// Samples `|R(z)|` over `window`. Nodes within one cell diagonal of a pole
/// get magnitude `+inf` and are flagged.
pub fn raster(ctx: &StabilityContext, window: Window, nx: usize, ny: usize) -> Result<RegionRaster> {
    if nx < 2 || ny < 2 {
        return Err(Error::input(format!("raster needs nx, ny >= 2, got {nx} x {ny}")));
    }
    let window = Window::new(window.x0, window.x1, window.y0, window.y1)?;
    let dx = (window.x1 - window.x0) / (nx - 1) as f64;
    let dy = (window.y1 - window.y0) / (ny - 1) as f64;
    let diag = dx.hypot(dy);
    let poles = ctx.poles();

    let mut magnitude = Vec::with_capacity(nx * ny);
    let mut inside = Vec::with_capacity(nx * ny);
    let mut pole = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = window.y0 + dy * j as f64;
        for i in 0..nx {
            let x = window.x0 + dx * i as f64;
            let near_pole = poles.iter().any(|&p| (x - p).hypot(y) <= diag);
            let m = if near_pole {
                f64::INFINITY
            } else {
                match single_var_stability(ctx, Complex64::new(x, y)) {
                    Ok(r) if r.norm().is_finite() => r.norm(),
                    _ => f64::INFINITY,
                }
            };
            pole.push(near_pole || m == f64::INFINITY);
            inside.push(m <= 1.0);
            magnitude.push(m);
        }
    }
    Ok(RegionRaster {
        window,
        nx,
        ny,
        magnitude,
        inside,
        pole,
    })
}

impl RegionRaster {
    pub fn x(&self, i: usize) -> f64 {
        self.window.x0 + (self.window.x1 - self.window.x0) * i as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.window.y0 + (self.window.y1 - self.window.y0) * j as f64 / (self.ny - 1) as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.magnitude[j * self.nx + i]
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.nx + i]
    }

    pub fn is_pole(&self, i: usize, j: usize) -> bool {
        self.pole[j * self.nx + i]
    }

    /// `re_z_lambdaR_dt,im_z_lambdaR_dt,abs_R,inside,pole`, one row per node;
    /// `z` is in units of `lambda_R dt`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z_lambdaR_dt,im_z_lambdaR_dt,abs_R,inside,pole\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let m = self.at(i, j);
                let m = if m.is_finite() { format!("{m:.12e}") } else { "inf".into() };
                let _ = writeln!(
                    out,
                    "{:.12e},{:.12e},{},{},{}",
                    self.x(i),
                    self.y(j),
                    m,
                    u8::from(self.is_inside(i, j)),
                    u8::from(self.is_pole(i, j))
                );
            }
        }
        out
    }

    /// Inside nodes 4-connected to the node nearest the origin.
    pub fn origin_component(&self) -> Vec<bool> {
        let mut mark = vec![false; self.nx * self.ny];
        let w = &self.window;
        if !(w.x0 <= 0.0 && 0.0 <= w.x1 && w.y0 <= 0.0 && 0.0 <= w.y1) {
            return mark;
        }
        let i0 = ((-w.x0) / (w.x1 - w.x0) * (self.nx - 1) as f64).round() as usize;
        let j0 = ((-w.y0) / (w.y1 - w.y0) * (self.ny - 1) as f64).round() as usize;
        let start = j0 * self.nx + i0;
        if !self.inside[start] {
            return mark;
        }
        let mut queue = VecDeque::from([(i0, j0)]);
        mark[start] = true;
        while let Some((i, j)) = queue.pop_front() {
            let mut visit = |ii: usize, jj: usize| {
                let k = jj * self.nx + ii;
                if self.inside[k] && !mark[k] {
                    mark[k] = true;
                    queue.push_back((ii, jj));
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < self.nx {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < self.ny {
                visit(i, j + 1);
            }
        }
        mark
    }

    /// Marching-squares segments of the level set `|R| = 1`.
    pub fn contour_segments(&self) -> Vec<[(f64, f64); 2]> {
        // Clamp infinities so interpolation stays finite.
        let f = |i: usize, j: usize| (self.at(i, j).min(1e6)) - 1.0;
        let mut segs = Vec::new();
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                // Corners counter-clockwise from bottom-left.
                let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let vals = corners.map(|(a, b)| f(a, b));
                let case = vals
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &v)| acc | (u8::from(v > 0.0) << k));
                if case == 0 || case == 15 {
                    continue;
                }
                let point_on = |e: usize| {
                    let (a, b) = (e, (e + 1) % 4);
                    let t = vals[a] / (vals[a] - vals[b]);
                    let (pa, pb) = (corners[a], corners[b]);
                    let (xa, ya) = (self.x(pa.0), self.y(pa.1));
                    let (xb, yb) = (self.x(pb.0), self.y(pb.1));
                    (xa + t * (xb - xa), ya + t * (yb - ya))
                };
                // Edges crossed: edge e joins corner e and e+1.
                let crossed: Vec<usize> = (0..4)
                    .filter(|&e| (vals[e] > 0.0) != (vals[(e + 1) % 4] > 0.0))
                    .collect();
                match crossed.len() {
                    2 => segs.push([point_on(crossed[0]), point_on(crossed[1])]),
                    4 => {
                        // Saddle: resolve with the cell-centre value.
                        let centre = vals.iter().sum::<f64>() / 4.0;
                        let corner0_out = vals[0] > 0.0;
                        if (centre > 0.0) == corner0_out {
                            segs.push([point_on(1), point_on(0)]);
                            segs.push([point_on(3), point_on(2)]);
                        } else {
                            segs.push([point_on(0), point_on(3)]);
                            segs.push([point_on(2), point_on(1)]);
                        }
                    }
                    _ => {}
                }
            }
        }
        segs
    }

    /// SVG with the origin-connected stable component shaded and the
    /// `|R| = 1` contour drawn on top.
    pub fn to_svg(&self, title: &str) -> String {
        const W: f64 = 640.0;
        let win = &self.window;
        let h = W * (win.y1 - win.y0) / (win.x1 - win.x0);
        let sx = |x: f64| (x - win.x0) / (win.x1 - win.x0) * W;
        let sy = |y: f64| (win.y1 - y) / (win.y1 - win.y0) * h;
        let dx = (win.x1 - win.x0) / (self.nx - 1) as f64;
        let dy = (win.y1 - win.y0) / (self.ny - 1) as f64;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0}" height="{h:.0}" viewBox="0 0 {W:.3} {h:.3}">"#
        );
        let _ = writeln!(out, "<title>{}</title>", xml_escape(title));
        let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

        let comp = self.origin_component();
        let _ = writeln!(out, r##"<g fill="#9ecae1" stroke="none">"##);
        for j in 0..self.ny {
            let mut i = 0;
            while i < self.nx {
                if !comp[j * self.nx + i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < self.nx && comp[j * self.nx + i] {
                    i += 1;
                }
                let x0 = self.x(start) - 0.5 * dx;
                let x1 = self.x(i - 1) + 0.5 * dx;
                let y1 = self.y(j) + 0.5 * dy;
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                    sx(x0),
                    sy(y1),
                    sx(x1) - sx(x0),
                    dy / (win.y1 - win.y0) * h
                );
            }
        }
        let _ = writeln!(out, "</g>");

        let _ = writeln!(out, r##"<g stroke="#999999" stroke-width="0.5">"##);
        if win.x0 <= 0.0 && 0.0 <= win.x1 {
            let _ = writeln!(out, r#"<line x1="{0:.3}" y1="0" x2="{0:.3}" y2="{1:.3}"/>"#, sx(0.0), h);
        }
        if win.y0 <= 0.0 && 0.0 <= win.y1 {
            let _ = writeln!(out, r#"<line x1="0" y1="{0:.3}" x2="{1:.3}" y2="{0:.3}"/>"#, sy(0.0), W);
        }
        let _ = writeln!(out, "</g>");

        let _ = writeln!(out, r##"<g stroke="#08306b" stroke-width="1" fill="none">"##);
        for [(ax, ay), (bx, by)] in self.contour_segments() {
            let _ = writeln!(
                out,
                r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                sx(ax),
                sy(ay),
                sx(bx),
                sy(by)
            );
        }
        let _ = writeln!(out, "</g>");
        out.push_str("</svg>\n");
        out
    }

    /// `<method>_<ordering>.svg`, with characters unsafe in file names replaced.
    pub fn svg_file_name(method: &str, ordering: super::OperatorOrdering) -> String {
        let safe: String = method
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else if c == '*' { 'a' } else { '_' })
            .collect();
        format!("{safe}_{ordering}.svg")
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::SubIntegratorPlan;
    use crate::methods::{lookup, SplittingMethod};
    use crate::stability::{ButcherTableau, OperatorOrdering};

    fn fe_ctx() -> StabilityContext {
        StabilityContext::new(
            lookup("lie-trotter").unwrap(),
            SubIntegratorPlan::uniform(ButcherTableau::forward_euler()),
            OperatorOrdering::DR,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn rejects_degenerate_input() {
        let w = Window { x0: 0.0, x1: 0.0, y0: -1.0, y1: 1.0 };
        assert!(raster(&fe_ctx(), w, 10, 10).is_err());
        let w = Window::new(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!(raster(&fe_ctx(), w, 1, 10).is_err());
    }

    #[test]
    fn lie_trotter_fe_matches_direct_evaluation() {
        let w = Window::new(-3.0, 1.0, -2.0, 2.0).unwrap();
        let r = raster(&fe_ctx(), w, 41, 41).unwrap();
        for j in 0..41 {
            for i in 0..41 {
                let z = Complex64::new(r.x(i), r.y(j));
                let direct = ((1.0 + z) * (1.0 + z)).norm();
                assert!((r.at(i, j) - direct).abs() < 1e-14 * (1.0 + direct));
                if (direct - 1.0).abs() > 1e-12 {
                    assert_eq!(r.is_inside(i, j), direct <= 1.0);
                }
            }
        }
    }

    #[test]
    fn origin_neighbourhood_is_inside() {
        let w = Window::new(-1e-3, 0.0, -1e-3, 1e-3).unwrap();
        let ruth = lookup("ruth").unwrap();
        let ctx = StabilityContext::from_spec(ruth, &crate::integrators::PlanSpec::standard(), OperatorOrdering::RD, 1.0).unwrap();
        let r = raster(&ctx, w, 5, 5).unwrap();
        // Along the negative real axis near 0 the method is stable.
        for i in 0..5 {
            assert!(r.is_inside(i, 2));
        }
    }

    #[test]
    fn backward_implicit_step_marks_pole_cells() {
        // Single backward SDIRK sub-step: pole at 1/(gamma * alpha) < 0.
        let alpha = -0.5;
        let m = SplittingMethod::from_columns("back", &[alpha], &[0.0], 0).unwrap();
        let ctx = StabilityContext::new(m, SubIntegratorPlan::uniform(ButcherTableau::sdirk23()), OperatorOrdering::RD, 1.0).unwrap();
        let p = 1.0 / (ButcherTableau::SDIRK23_GAMMA * alpha);
        let w = Window::new(-4.0, 1.0, -2.0, 2.0).unwrap();
        let r = raster(&ctx, w, 51, 41).unwrap();
        let diag = (0.1f64).hypot(0.1);
        for j in 0..41 {
            for i in 0..51 {
                let near = (r.x(i) - p).hypot(r.y(j)) <= diag;
                assert_eq!(r.is_pole(i, j), near, "({}, {})", r.x(i), r.y(j));
                if near {
                    assert_eq!(r.at(i, j), f64::INFINITY);
                    assert!(!r.is_inside(i, j));
                }
            }
        }
    }

    #[test]
    fn csv_and_svg_exports() {
        let w = Window::new(-3.0, 1.0, -2.0, 2.0).unwrap();
        let r = raster(&fe_ctx(), w, 21, 21).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("re_z_lambdaR_dt,im_z_lambdaR_dt,abs_R,inside,pole\n"));
        assert_eq!(csv.lines().count(), 1 + 21 * 21);
        let svg = r.to_svg("lie-trotter DR");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<line"));
        assert!(svg.contains("<rect x="));
        assert_eq!(RegionRaster::svg_file_name("ruth", OperatorOrdering::RD), "ruth_RD.svg");
    }

    #[test]
    fn contour_points_lie_on_unit_level() {
        let w = Window::new(-3.0, 1.0, -2.0, 2.0).unwrap();
        let r = raster(&fe_ctx(), w, 81, 81).unwrap();
        let segs = r.contour_segments();
        assert!(!segs.is_empty());
        for seg in segs {
            for (x, y) in seg {
                let m = ((1.0 + Complex64::new(x, y)).powi(2)).norm();
                assert!((m - 1.0).abs() < 0.05, "{x} {y} {m}");
            }
        }
    }

    #[test]
    fn origin_component_is_the_fe_disk() {
        let w = Window::new(-3.0, 1.0, -2.0, 2.0).unwrap();
        let r = raster(&fe_ctx(), w, 41, 41).unwrap();
        let comp = r.origin_component();
        let count = comp.iter().filter(|&&b| b).count();
        let inside = r.inside.iter().filter(|&&b| b).count();
        assert_eq!(count, inside);
        assert!(count > 0);
    }
}
