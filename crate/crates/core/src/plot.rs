//! Self-contained SVG figures: obstacles, level sets by marching squares,
//! paths, sensors and gradient arrows.

use std::fmt::Write;

use crate::grid::Grid;

const PIXELS_PER_UNIT: f64 = 400.0;

/// Line segments of the level set `{f = level}` of a cell-centred field
/// (`values[i * ny + j]`). Non-finite corners suppress their square.
pub fn marching_squares(values: &[f64], nx: usize, ny: usize, level: f64) -> Vec<[[f64; 2]; 2]> {
    let mut segs = Vec::new();
    if nx < 2 || ny < 2 {
        return segs;
    }
    let at = |i: usize, j: usize| values[i * ny + j];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise from (i, j)
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v = c.map(|(a, b)| at(a, b));
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let case = v.iter().enumerate().fold(0, |acc, (k, &x)| acc | (((x > level) as usize) << k));
            if case == 0 || case == 15 {
                continue;
            }
            let edge = |k: usize| -> [f64; 2] {
                let (a, b) = (k, (k + 1) % 4);
                let t = (level - v[a]) / (v[b] - v[a]);
                [
                    c[a].0 as f64 + t * (c[b].0 as f64 - c[a].0 as f64),
                    c[a].1 as f64 + t * (c[b].1 as f64 - c[a].1 as f64),
                ]
            };
            let crossing: Vec<usize> = (0..4).filter(|&k| ((case >> k) & 1) != ((case >> ((k + 1) % 4)) & 1)).collect();
            if crossing.len() == 2 {
                segs.push([edge(crossing[0]), edge(crossing[1])]);
            } else {
                // saddle: resolve by the centre value
                let centre = v.iter().sum::<f64>() / 4.0 > level;
                let corner0_above = case & 1 == 1;
                if centre == corner0_above {
                    segs.push([edge(0), edge(1)]);
                    segs.push([edge(2), edge(3)]);
                } else {
                    segs.push([edge(3), edge(0)]);
                    segs.push([edge(1), edge(2)]);
                }
            }
        }
    }
    segs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Glyph {
    Source,
    Keypoint,
    Sensor,
}

/// Incrementally assembled figure of the rectangle of a grid.
pub struct Figure<'a> {
    grid: &'a Grid,
    body: String,
}

impl<'a> Figure<'a> {
    pub fn new(grid: &'a Grid) -> Self {
        let mut fig = Figure { grid, body: String::new() };
        fig.obstacles();
        fig
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let lo = self.grid.lower();
        let up = self.grid.upper();
        ((p[0] - lo[0]) * PIXELS_PER_UNIT, (up[1] - p[1]) * PIXELS_PER_UNIT)
    }

    fn index_px(&self, q: [f64; 2]) -> (f64, f64) {
        let h = self.grid.steps();
        let lo = self.grid.lower();
        self.px([lo[0] + (q[0] + 0.5) * h[0], lo[1] + (q[1] + 0.5) * h[1]])
    }

    fn obstacles(&mut self) {
        let [nx, ny, _] = self.grid.dims();
        let h = self.grid.steps();
        let lo = self.grid.lower();
        let (w, hh) = (h[0] * PIXELS_PER_UNIT, h[1] * PIXELS_PER_UNIT);
        for i in 0..nx {
            let mut j = 0;
            while j < ny {
                if !self.grid.is_cell_masked(i, j) {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < ny && self.grid.is_cell_masked(i, j) {
                    j += 1;
                }
                let (x, y) = self.px([lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]]);
                let _ = writeln!(
                    self.body,
                    r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="#555"/>"##,
                    (j - start) as f64 * hh
                );
            }
        }
    }

    /// Level sets of a cell field at `count` evenly spaced finite levels.
    pub fn contours(&mut self, values: &[f64], count: usize) -> &mut Self {
        let [nx, ny, _] = self.grid.dims();
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !(hi > lo) {
            return self;
        }
        for n in 1..=count {
            let level = lo + (hi - lo) * n as f64 / (count + 1) as f64;
            let mut d = String::new();
            for [a, b] in marching_squares(values, nx, ny, level) {
                let (pa, pb) = (self.index_px(a), self.index_px(b));
                let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", pa.0, pa.1, pb.0, pb.1);
            }
            let _ = writeln!(self.body, r##"<path d="{d}" stroke="#88a" stroke-width="0.8" fill="none"/>"##);
        }
        self
    }

    pub fn path(&mut self, points: &[[f64; 2]], colour: &str) -> &mut Self {
        let pts: Vec<String> = points
            .iter()
            .map(|&p| {
                let (x, y) = self.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" stroke="{colour}" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
        self
    }

    pub fn glyph(&mut self, p: [f64; 2], kind: Glyph) -> &mut Self {
        let (x, y) = self.px(p);
        let colour = match kind {
            Glyph::Source => "blue",
            Glyph::Keypoint => "red",
            Glyph::Sensor => "black",
        };
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{colour}"/>"#);
        self
    }

    pub fn arrow(&mut self, from: [f64; 2], to: [f64; 2]) -> &mut Self {
        let (a, b) = (self.px(from), self.px(to));
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="green" stroke-width="2" marker-end="url(#head)"/>"#,
            a.0, a.1, b.0, b.1
        );
        self
    }

    pub fn finish(&self) -> String {
        let lo = self.grid.lower();
        let up = self.grid.upper();
        let (w, h) = ((up[0] - lo[0]) * PIXELS_PER_UNIT, (up[1] - lo[1]) * PIXELS_PER_UNIT);
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
                "\n",
                r#"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0L6,3L0,6z" fill="green"/></marker></defs>"#,
                "\n",
                r#"<rect width="{w:.2}" height="{h:.2}" fill="white" stroke="black"/>"#,
                "\n{body}</svg>\n"
            ),
            w = w,
            h = h,
            body = self.body
        )
    }
}

/// Stencil offsets drawn around the origin, one colour per control.
pub fn stencil_svg(controls: &[Vec<([i32; 3], f64)>]) -> String {
    let colours = ["crimson", "royalblue", "darkgreen", "darkorange"];
    let reach = controls.iter().flatten().map(|(e, _)| e[0].abs().max(e[1].abs())).max().unwrap_or(1).max(1);
    let scale = 200.0 / (reach as f64 + 1.0);
    let size = 2.0 * (reach as f64 + 1.0) * scale;
    let c = size / 2.0;
    let mut body = String::new();
    for (n, control) in controls.iter().enumerate() {
        let colour = colours[n % colours.len()];
        for (e, w) in control {
            let (x, y) = (c + e[0] as f64 * scale, c - e[1] as f64 * scale);
            let _ = writeln!(
                body,
                r#"<line x1="{c:.2}" y1="{c:.2}" x2="{x:.2}" y2="{y:.2}" stroke="{colour}" stroke-width="1"/><circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{colour}"><title>offset ({}, {}, {}) weight {w:.6e}</title></circle>"#,
                e[0], e[1], e[2]
            );
        }
    }
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size:.0}\" height=\"{size:.0}\">\n<rect width=\"{size:.0}\" height=\"{size:.0}\" fill=\"white\" stroke=\"black\"/>\n<circle cx=\"{c:.2}\" cy=\"{c:.2}\" r=\"3\" fill=\"black\"/>\n{body}</svg>\n"
    )
}
