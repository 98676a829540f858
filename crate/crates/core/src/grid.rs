//! Cell-centred lattices over a rectangle, optionally extended by a periodic
//! heading axis.
//!
//! Nodes are flattened in C order over `(x, y, θ)`, so the heading fiber of a
//! spatial cell is contiguous: `flat = (i * ny + j) * nθ + k`. Planar grids
//! carry a trivial third axis of length one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative mismatch tolerated between the two spatial steps.
pub const SQUARE_PIXEL_TOLERANCE: f64 = 0.02;

pub type NodeIndex = [usize; 3];
pub type Offset = [i32; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Obstacle {
    Box { lower: [f64; 2], upper: [f64; 2] },
    Disc { center: [f64; 2], radius: f64 },
}

impl Obstacle {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Obstacle::Box { lower, upper } => {
                p[0] >= lower[0] && p[0] <= upper[0] && p[1] >= lower[1] && p[1] <= upper[1]
            }
            Obstacle::Disc { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy <= radius * radius
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub nx: usize,
    /// `None` derives the count from `nx` so that pixels are square.
    #[serde(default)]
    pub ny: Option<usize>,
    #[serde(default)]
    pub ntheta: Option<usize>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
}

impl GridSpec {
    pub fn rectangle(lower: [f64; 2], upper: [f64; 2], nx: usize, ny: usize) -> Self {
        GridSpec { lower, upper, nx, ny: Some(ny), ntheta: None, obstacles: Vec::new() }
    }

    pub fn with_angles(mut self, ntheta: usize) -> Self {
        self.ntheta = Some(ntheta);
        self
    }

    pub fn with_obstacles(mut self, obstacles: Vec<Obstacle>) -> Self {
        self.obstacles = obstacles;
        self
    }

    pub fn resolved_ny(&self) -> usize {
        match self.ny {
            Some(ny) => ny,
            None => {
                let hx = (self.upper[0] - self.lower[0]) / self.nx as f64;
                (((self.upper[1] - self.lower[1]) / hx).round() as usize).max(2)
            }
        }
    }
}

/// A physical point, with a heading when the grid has an angular axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub theta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    lower: [f64; 2],
    dims: [usize; 3],
    steps: [f64; 3],
    angular: bool,
    mask: Vec<bool>,
}

/// Header accompanying a raw byte mask (row-major over `[nx, ny]`, y fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskHeader {
    pub dims: [usize; 2],
    pub rect: Rect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

pub fn build_grid(spec: &GridSpec) -> Result<Grid> {
    let width = spec.upper[0] - spec.lower[0];
    let height = spec.upper[1] - spec.lower[1];
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidGrid("rectangle has non-positive extent".into()));
    }
    let nx = spec.nx;
    let ny = spec.resolved_ny();
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidGrid(format!("resolution {nx}x{ny} below 2")));
    }
    let hx = width / nx as f64;
    let hy = height / ny as f64;
    if (hx - hy).abs() > SQUARE_PIXEL_TOLERANCE * hx.max(hy) {
        return Err(Error::InvalidGrid(format!("non-square pixels: hx={hx}, hy={hy}")));
    }
    let (nt, angular) = match spec.ntheta {
        Some(nt) if nt < 4 => {
            return Err(Error::InvalidGrid(format!("angular resolution {nt} below 4")))
        }
        Some(nt) => (nt, true),
        None => (1, false),
    };
    let mut spatial = vec![false; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let p = [spec.lower[0] + (i as f64 + 0.5) * hx, spec.lower[1] + (j as f64 + 0.5) * hy];
            spatial[i * ny + j] = spec.obstacles.iter().any(|o| o.contains(p));
        }
    }
    Grid::new(spec.lower, [nx, ny, nt], [hx, hy], angular, Some(spatial))
}

impl Grid {
    /// Low-level constructor. `spatial_mask` is over `[nx, ny]` and is
    /// extruded along the angular axis. No square-pixel constraint.
    pub fn new(
        lower: [f64; 2],
        dims: [usize; 3],
        spatial_steps: [f64; 2],
        angular: bool,
        spatial_mask: Option<Vec<bool>>,
    ) -> Result<Grid> {
        let [nx, ny, nt] = dims;
        if nx == 0 || ny == 0 || nt == 0 {
            return Err(Error::InvalidGrid(format!("zero dimension in {dims:?}")));
        }
        if !angular && nt != 1 {
            return Err(Error::InvalidGrid("planar grid must have a trivial third axis".into()));
        }
        if !(spatial_steps[0] > 0.0 && spatial_steps[1] > 0.0) {
            return Err(Error::InvalidGrid("non-positive step".into()));
        }
        let mut spatial = spatial_mask.unwrap_or_else(|| vec![false; nx * ny]);
        if spatial.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: spatial.len() });
        }
        // Free cells without a free 4-neighbour are unreachable; mask them.
        if nx * ny > 1 {
            let isolated: Vec<usize> = (0..nx * ny)
                .filter(|&c| {
                    let (i, j) = (c / ny, c % ny);
                    !spatial[c]
                        && [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)].iter().all(|&(di, dj)| {
                            let (a, b) = (i as i64 + di, j as i64 + dj);
                            a < 0
                                || b < 0
                                || a >= nx as i64
                                || b >= ny as i64
                                || spatial[a as usize * ny + b as usize]
                        })
                })
                .collect();
            for c in isolated {
                spatial[c] = true;
            }
        }
        if spatial.iter().all(|&m| m) {
            return Err(Error::EmptyDomain);
        }
        let mask = spatial.iter().flat_map(|&m| std::iter::repeat(m).take(nt)).collect();
        let htheta = if angular { 2.0 * PI / nt as f64 } else { 1.0 };
        Ok(Grid {
            lower,
            dims,
            steps: [spatial_steps[0], spatial_steps[1], htheta],
            angular,
            mask,
        })
    }

    /// Builds a grid from an imported byte mask (0 free, 1 masked).
    pub fn from_mask_bytes(header: &MaskHeader, bytes: &[u8], ntheta: Option<usize>) -> Result<Grid> {
        let [nx, ny] = header.dims;
        if bytes.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, got: bytes.len() });
        }
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("resolution {nx}x{ny} below 2")));
        }
        if let Some(nt) = ntheta {
            if nt < 4 {
                return Err(Error::InvalidGrid(format!("angular resolution {nt} below 4")));
            }
        }
        let hx = (header.rect.upper[0] - header.rect.lower[0]) / nx as f64;
        let hy = (header.rect.upper[1] - header.rect.lower[1]) / ny as f64;
        if (hx - hy).abs() > SQUARE_PIXEL_TOLERANCE * hx.max(hy) {
            return Err(Error::InvalidGrid(format!("non-square pixels: hx={hx}, hy={hy}")));
        }
        let mask = bytes
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidGrid(format!("mask byte {other} is neither 0 nor 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Grid::new(
            header.rect.lower,
            [nx, ny, ntheta.unwrap_or(1)],
            [hx, hy],
            ntheta.is_some(),
            Some(mask),
        )
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Steps per axis; the third entry is the angular step (1 for planar grids).
    pub fn steps(&self) -> [f64; 3] {
        self.steps
    }

    /// Mean spatial step.
    pub fn h(&self) -> f64 {
        0.5 * (self.steps[0] + self.steps[1])
    }

    pub fn lower(&self) -> [f64; 2] {
        self.lower
    }

    pub fn upper(&self) -> [f64; 2] {
        [
            self.lower[0] + self.dims[0] as f64 * self.steps[0],
            self.lower[1] + self.dims[1] as f64 * self.steps[1],
        ]
    }

    pub fn is_angular(&self) -> bool {
        self.angular
    }

    pub fn ntheta(&self) -> usize {
        self.dims[2]
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn spatial_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_masked(&self, node: usize) -> bool {
        self.mask[node]
    }

    pub fn is_cell_masked(&self, i: usize, j: usize) -> bool {
        self.mask[self.flat([i, j, 0])]
    }

    pub fn unmasked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    #[inline]
    pub fn flat(&self, idx: NodeIndex) -> usize {
        (idx[0] * self.dims[1] + idx[1]) * self.dims[2] + idx[2]
    }

    #[inline]
    pub fn unflat(&self, node: usize) -> NodeIndex {
        let k = node % self.dims[2];
        let rest = node / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], k]
    }

    /// Flat index of the spatial cell `(i, j)` in a `[nx, ny]` array.
    #[inline]
    pub fn cell_flat(&self, node: usize) -> usize {
        node / self.dims[2]
    }

    /// Node reached from `node` by `offset`, wrapping the angular axis.
    /// `None` when the target leaves the rectangle.
    #[inline]
    pub fn shift(&self, node: NodeIndex, offset: Offset) -> Option<NodeIndex> {
        let i = node[0] as i64 + offset[0] as i64;
        let j = node[1] as i64 + offset[1] as i64;
        if i < 0 || j < 0 || i >= self.dims[0] as i64 || j >= self.dims[1] as i64 {
            return None;
        }
        let nt = self.dims[2] as i64;
        let k = if self.angular {
            (node[2] as i64 + offset[2] as i64).rem_euclid(nt)
        } else if offset[2] != 0 {
            return None;
        } else {
            0
        };
        Some([i as usize, j as usize, k as usize])
    }

    pub fn check_index(&self, idx: &[usize]) -> Result<NodeIndex> {
        let want = if self.angular { 3 } else { 2 };
        let out_of_range = || Error::IndexOutOfRange {
            index: idx.to_vec(),
            dims: self.dims[..want].to_vec(),
        };
        if idx.len() != want && !(idx.len() == 3 && !self.angular && idx[2] == 0) {
            return Err(out_of_range());
        }
        let mut full = [0usize; 3];
        for (a, &v) in idx.iter().enumerate() {
            if v >= self.dims[a] {
                return Err(out_of_range());
            }
            full[a] = v;
        }
        Ok(full)
    }

    pub fn theta_of(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.steps[2]
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.lower[0] + (i as f64 + 0.5) * self.steps[0],
            self.lower[1] + (j as f64 + 0.5) * self.steps[1],
        ]
    }

    pub fn point_of_index(&self, idx: &[usize]) -> Result<Point> {
        let full = self.check_index(idx)?;
        let [x, y] = self.cell_center(full[0], full[1]);
        Ok(Point { x, y, theta: self.angular.then(|| self.theta_of(full[2])) })
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let up = self.upper();
        p[0] >= self.lower[0] && p[0] <= up[0] && p[1] >= self.lower[1] && p[1] <= up[1]
    }

    /// Spatial cell containing `p`, ignoring the mask.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let i = (((p[0] - self.lower[0]) / self.steps[0]).floor() as usize).min(self.dims[0] - 1);
        let j = (((p[1] - self.lower[1]) / self.steps[1]).floor() as usize).min(self.dims[1] - 1);
        Some((i, j))
    }

    pub fn angle_index(&self, theta: f64) -> usize {
        let t = theta.rem_euclid(2.0 * PI);
        ((t / self.steps[2]).floor() as usize) % self.dims[2]
    }

    /// Nearest node to a physical point. A missing heading on an angular grid
    /// selects fiber 0.
    pub fn snap(&self, p: [f64; 2], theta: Option<f64>) -> Result<NodeIndex> {
        let (i, j) = self.cell_of(p).ok_or(Error::PointOutside(p[0], p[1]))?;
        if self.is_cell_masked(i, j) {
            return Err(Error::MaskedSeed(p[0], p[1]));
        }
        let k = match (self.angular, theta) {
            (true, Some(t)) => self.angle_index(t),
            _ => 0,
        };
        Ok([i, j, k])
    }

    /// Spatial 2D mask as bytes (0 free, 1 masked) with its header.
    pub fn mask_bytes(&self) -> (MaskHeader, Vec<u8>) {
        let bytes = (0..self.spatial_len())
            .map(|c| self.mask[c * self.dims[2]] as u8)
            .collect();
        let header = MaskHeader {
            dims: [self.dims[0], self.dims[1]],
            rect: Rect { lower: self.lower, upper: self.upper() },
        };
        (header, bytes)
    }
}
