//! Detection cost fields of the three sensor players and their derivatives
//! with respect to the sensor parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Rect};
use crate::stencils::Model;

pub const DEFAULT_BACKGROUND: f64 = 0.05;
pub const DEFAULT_COST_CAP: f64 = 1e6;
pub const PAINT_BOUNDS: [f64; 2] = [0.1, 1.0];
pub const RADAR_REGION: Rect = Rect { lower: [0.4, 0.1], upper: [1.6, 0.9] };

const BOUND_SLACK: f64 = 1e-12;

fn paint_bounds() -> [f64; 2] {
    PAINT_BOUNDS
}

fn background() -> f64 {
    DEFAULT_BACKGROUND
}

fn unit() -> f64 {
    1.0
}

fn radar_region() -> Rect {
    RADAR_REGION
}

/// A constant or a per-cell density (row-major over `[nx, ny]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Density {
    Uniform(f64),
    Map(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaintField {
    pub density: Density,
    #[serde(default = "paint_bounds")]
    pub bounds: [f64; 2],
}

impl PaintField {
    pub fn uniform(xi: f64) -> Self {
        PaintField { density: Density::Uniform(xi), bounds: PAINT_BOUNDS }
    }

    /// Density per spatial cell.
    pub fn cells(&self, grid: &Grid) -> Result<Vec<f64>> {
        let n = grid.spatial_len();
        let xi = match &self.density {
            Density::Uniform(v) => vec![*v; n],
            Density::Map(m) if m.len() == n => m.clone(),
            Density::Map(m) => return Err(Error::DimensionMismatch { expected: n, got: m.len() }),
        };
        let [lo, hi] = self.bounds;
        if !(0.0 < lo && lo <= hi) {
            return Err(Error::InvalidSensors(format!("paint bounds [{lo}, {hi}]")));
        }
        if let Some((c, v)) = xi
            .iter()
            .enumerate()
            .find(|&(_, &v)| !(v >= lo - BOUND_SLACK && v <= hi + BOUND_SLACK))
        {
            return Err(Error::InvalidSensors(format!("paint density {v} at cell {c} outside [{lo}, {hi}]")));
        }
        Ok(xi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSet {
    pub positions: Vec<[f64; 2]>,
    #[serde(default = "background")]
    pub background: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarSet {
    pub positions: Vec<[f64; 2]>,
    /// Broadside to nose-on detectability ratio.
    #[serde(default = "unit")]
    pub delta: f64,
    #[serde(default = "radar_region")]
    pub region: Rect,
}

fn check_point(grid: &Grid, q: [f64; 2], what: &str) -> Result<()> {
    match grid.cell_of(q) {
        None => Err(Error::InvalidSensors(format!("{what} at ({}, {}) outside the domain", q[0], q[1]))),
        Some((i, j)) if grid.is_cell_masked(i, j) => {
            Err(Error::InvalidSensors(format!("{what} at ({}, {}) inside an obstacle", q[0], q[1])))
        }
        _ => Ok(()),
    }
}

/// Paint cost: the density broadcast over the heading fibers.
pub fn cost_field_paint(grid: &Grid, paint: &PaintField) -> Result<Vec<f64>> {
    let xi = paint.cells(grid)?;
    Ok(broadcast(grid, &xi))
}

pub(crate) fn broadcast(grid: &Grid, cells: &[f64]) -> Vec<f64> {
    let nt = grid.ntheta();
    cells.iter().flat_map(|&v| std::iter::repeat(v).take(nt)).collect()
}

/// Whether the segment `[p, q]` avoids every masked cell. Walks the exact
/// sequence of cells crossed by the segment; a crossing through a cell corner
/// is blocked if either side cell is masked.
pub fn line_of_sight(grid: &Grid, p: [f64; 2], q: [f64; 2]) -> bool {
    let (Some((mut i, mut j)), Some(end)) = (grid.cell_of(p), grid.cell_of(q)) else { return false };
    let lo = grid.lower();
    let h = grid.steps();
    let d = [q[0] - p[0], q[1] - p[1]];
    let free = |i: usize, j: usize| !grid.is_cell_masked(i, j);
    // parameter of the first boundary crossing and its increment, per axis
    let first = |a: usize, c: usize| -> (f64, f64) {
        if d[a] > 0.0 {
            ((lo[a] + (c + 1) as f64 * h[a] - p[a]) / d[a], h[a] / d[a])
        } else if d[a] < 0.0 {
            ((lo[a] + c as f64 * h[a] - p[a]) / d[a], -h[a] / d[a])
        } else {
            (f64::INFINITY, f64::INFINITY)
        }
    };
    let (mut tx, dx) = first(0, i);
    let (mut ty, dy) = first(1, j);
    let [nx, ny, _] = grid.dims();
    let step = |c: usize, dir: f64, n: usize| -> Option<usize> {
        if dir > 0.0 {
            (c + 1 < n).then_some(c + 1)
        } else {
            c.checked_sub(1)
        }
    };
    loop {
        if !free(i, j) {
            return false;
        }
        if (i, j) == end || tx.min(ty) > 1.0 {
            return true;
        }
        if tx < ty {
            let Some(n) = step(i, d[0], nx) else { return true };
            i = n;
            tx += dx;
        } else if ty < tx {
            let Some(n) = step(j, d[1], ny) else { return true };
            j = n;
            ty += dy;
        } else {
            let (Some(a), Some(b)) = (step(i, d[0], nx), step(j, d[1], ny)) else { return true };
            if !free(a, j) || !free(i, b) {
                return false;
            }
            i = a;
            j = b;
            tx += dx;
            ty += dy;
        }
    }
}

impl CameraSet {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.background > 0.0 && self.background.is_finite()) {
            return Err(Error::InvalidSensors(format!("background cost {}", self.background)));
        }
        self.positions.iter().try_for_each(|&q| check_point(grid, q, "camera"))
    }

    /// Visibility of each camera from each spatial cell centre.
    pub fn visibility(&self, grid: &Grid) -> Vec<Vec<bool>> {
        let [nx, ny, _] = grid.dims();
        self.positions
            .iter()
            .map(|&q| {
                (0..nx * ny)
                    .map(|c| {
                        let (i, j) = (c / ny, c % ny);
                        !grid.is_cell_masked(i, j) && line_of_sight(grid, grid.cell_center(i, j), q)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Per-cell camera cost `c₀ + Σ_visible ‖q - p‖⁻²`, capped at `cap`, with
/// `∂C/∂q` per camera (visibility frozen, zero where capped).
pub(crate) fn camera_cells(grid: &Grid, cams: &CameraSet, cap: f64) -> Result<(Vec<f64>, Vec<Vec<[f64; 2]>>)> {
    cams.validate(grid)?;
    let vis = cams.visibility(grid);
    let [nx, ny, _] = grid.dims();
    let mut cost = vec![cams.background; nx * ny];
    let mut grad = vec![vec![[0.0; 2]; cams.positions.len()]; nx * ny];
    for c in 0..nx * ny {
        let p = grid.cell_center(c / ny, c % ny);
        for (m, &q) in cams.positions.iter().enumerate() {
            if !vis[m][c] {
                continue;
            }
            let r = [q[0] - p[0], q[1] - p[1]];
            let d2 = r[0] * r[0] + r[1] * r[1];
            if d2 == 0.0 {
                cost[c] = f64::INFINITY;
                continue;
            }
            cost[c] += 1.0 / d2;
            grad[c][m] = [-2.0 * r[0] / (d2 * d2), -2.0 * r[1] / (d2 * d2)];
        }
        if cost[c] >= cap {
            cost[c] = cap;
            grad[c].iter_mut().for_each(|g| *g = [0.0; 2]);
        }
    }
    Ok((cost, grad))
}

/// Camera cost per node.
pub fn cost_field_camera(grid: &Grid, cams: &CameraSet, cap: f64) -> Result<Vec<f64>> {
    let (cells, _) = camera_cells(grid, cams, cap)?;
    Ok(broadcast(grid, &cells))
}

impl RadarSet {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::InvalidSensors("empty radar set".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidSensors(format!("delta {} outside (0, 1]", self.delta)));
        }
        let Rect { lower, upper } = self.region;
        for &q in &self.positions {
            if q[0] < lower[0] - BOUND_SLACK
                || q[0] > upper[0] + BOUND_SLACK
                || q[1] < lower[1] - BOUND_SLACK
                || q[1] > upper[1] + BOUND_SLACK
            {
                return Err(Error::InvalidSensors(format!("radar at ({}, {}) outside its region", q[0], q[1])));
            }
            check_point(grid, q, "radar")?;
        }
        Ok(())
    }
}

/// Single radar contribution `(⟨v,n⟩² + δ²⟨v,n⊥⟩²)/‖r‖⁴` for a unit velocity
/// `v`, `r = q - p`, distances clamped below by `dmin`. Returns the value and
/// its gradient in `q`.
pub fn radar_term(r: [f64; 2], v: [f64; 2], delta: f64, dmin: f64) -> (f64, [f64; 2]) {
    let d = (r[0] * r[0] + r[1] * r[1]).sqrt();
    let dc = d.max(dmin);
    let d4 = dc.powi(4);
    let d2 = delta * delta;
    if d == 0.0 {
        return (1.0 / d4, [0.0; 2]);
    }
    let a = v[0] * r[0] + v[1] * r[1];
    let u = a / d;
    let value = (d2 + (1.0 - d2) * u * u) / d4;
    let mut grad = [0.0; 2];
    for c in 0..2 {
        let du = v[c] / d - a * r[c] / (d * d * d);
        grad[c] = (1.0 - d2) * 2.0 * u * du / d4;
        if d > dmin {
            grad[c] += -4.0 * value * r[c] / (d * d);
        }
    }
    (value, grad)
}

/// Planar radar metric `Σ (δ² I + (1-δ²) n nᵀ)/‖r‖⁴` and its derivative in
/// each coordinate of each radar.
pub fn radar_metric(p: [f64; 2], radars: &RadarSet, dmin: f64) -> ([[f64; 2]; 2], Vec<[[[f64; 2]; 2]; 2]>) {
    let d2 = radars.delta * radars.delta;
    let mut m = [[0.0; 2]; 2];
    let mut dm = Vec::with_capacity(radars.positions.len());
    for &q in &radars.positions {
        let r = [q[0] - p[0], q[1] - p[1]];
        let dd = r[0] * r[0] + r[1] * r[1];
        let d = dd.sqrt();
        let dc = d.max(dmin);
        let inv4 = 1.0 / dc.powi(4);
        let mut t = [[d2 * inv4, 0.0], [0.0, d2 * inv4]];
        let mut dt = [[[0.0; 2]; 2]; 2];
        if d > 0.0 {
            for a in 0..2 {
                for b in 0..2 {
                    t[a][b] += (1.0 - d2) * r[a] * r[b] / dd * inv4;
                }
            }
            for c in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let e = |x: usize| if x == c { 1.0 } else { 0.0 };
                        let drr = (e(a) * r[b] + r[a] * e(b)) / dd - 2.0 * r[c] * r[a] * r[b] / (dd * dd);
                        dt[c][a][b] = (1.0 - d2) * drr * inv4;
                        if d > dmin {
                            dt[c][a][b] += -4.0 * r[c] / dd * t[a][b];
                        }
                    }
                }
            }
        }
        for a in 0..2 {
            for b in 0..2 {
                m[a][b] += t[a][b];
            }
        }
        dm.push(dt);
    }
    (m, dm)
}

/// Radar cost: a per-node heading-dependent scalar for curvature models, a
/// per-cell metric tensor for the planar Riemannian model.
#[derive(Debug, Clone, PartialEq)]
pub enum RadarCost {
    Scalar(Vec<f64>),
    Tensor(Vec<[[f64; 2]; 2]>),
}

pub fn cost_field_radar(grid: &Grid, radars: &RadarSet, model: Model, cap: f64) -> Result<RadarCost> {
    radars.validate(grid)?;
    let dmin = 2.0 * grid.h();
    let [nx, ny, nt] = grid.dims();
    match model {
        Model::Riemannian => Ok(RadarCost::Tensor(
            (0..nx * ny)
                .map(|c| radar_metric(grid.cell_center(c / ny, c % ny), radars, dmin).0)
                .collect(),
        )),
        Model::ReedsSheppForward | Model::Dubins => {
            let mut cost = Vec::with_capacity(grid.len());
            for c in 0..nx * ny {
                let p = grid.cell_center(c / ny, c % ny);
                for k in 0..nt {
                    let th = grid.theta_of(k);
                    let v = [th.cos(), th.sin()];
                    let s: f64 = radars
                        .positions
                        .iter()
                        .map(|&q| radar_term([q[0] - p[0], q[1] - p[1]], v, radars.delta, dmin).0)
                        .sum();
                    cost.push(s.sqrt().min(cap));
                }
            }
            Ok(RadarCost::Scalar(cost))
        }
        Model::Isotropic => Err(Error::InvalidParams(
            "the radar cost depends on the heading; use the riemannian or a curvature model".into(),
        )),
    }
}
