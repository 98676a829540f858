//! Minimal path extraction by descending the frozen upwind graph, and a
//! discrete curvature estimate for validating the extracted paths.

use crate::error::{Error, Result};
use crate::eikonal::SolveResult;
use crate::grid::{Grid, NodeIndex, Point};

/// Polyline in physical coordinates, in tracing order (from the start node
/// towards the seeds). `values[i]` is the interpolated value at `points[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn planar(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(|p| [p.x, p.y]).collect()
    }

    pub fn reversed(&self) -> Path {
        Path {
            points: self.points.iter().rev().copied().collect(),
            values: self.values.iter().rev().copied().collect(),
        }
    }

    pub fn length(&self) -> f64 {
        self.planar().windows(2).map(|w| dist(w[0], w[1])).sum()
    }

    /// Midpoint-rule integral of a cost `f(position, unit tangent)`.
    pub fn integrated_cost(&self, f: impl Fn([f64; 2], [f64; 2]) -> f64) -> f64 {
        self.planar()
            .windows(2)
            .map(|w| {
                let l = dist(w[0], w[1]);
                if l == 0.0 {
                    return 0.0;
                }
                let mid = [0.5 * (w[0][0] + w[1][0]), 0.5 * (w[0][1] + w[1][1])];
                let t = [(w[1][0] - w[0][0]) / l, (w[1][1] - w[0][1]) / l];
                l * f(mid, t)
            })
            .sum()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn point_segment_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    if l2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn directed_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    a.iter()
        .map(|&p| {
            if b.len() == 1 {
                return dist(p, b[0]);
            }
            b.windows(2).map(|w| point_segment_dist(p, w[0], w[1])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two polylines (vertices against
/// segments).
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Descent direction `Σ ω (-e) / Σ ω` at a node, in index coordinates.
fn node_direction(res: &SolveResult, node: usize) -> Option<[f64; 3]> {
    let edges = res.edges(node);
    if edges.is_empty() {
        return None;
    }
    let mut d = [0.0; 3];
    let mut tot = 0.0;
    for e in edges {
        let om = e.omega();
        tot += om;
        for a in 0..3 {
            d[a] -= om * e.offset[a] as f64;
        }
    }
    Some(d.map(|v| v / tot))
}

fn physical(grid: &Grid, q: [f64; 3]) -> Point {
    let lo = grid.lower();
    let h = grid.steps();
    Point {
        x: lo[0] + (q[0] + 0.5) * h[0],
        y: lo[1] + (q[1] + 0.5) * h[1],
        theta: grid
            .is_angular()
            .then(|| ((q[2] + 0.5) * h[2]).rem_euclid(2.0 * std::f64::consts::PI)),
    }
}

struct Sample {
    dir: [f64; 3],
    value: f64,
    wsum: f64,
    seed_hit: Option<NodeIndex>,
}

/// Multilinear interpolation of the descent direction and value over the
/// usable corners of the cell containing `q` (index coordinates).
fn sample(grid: &Grid, res: &SolveResult, q: [f64; 3]) -> Sample {
    let dims = grid.dims();
    let angular = grid.is_angular();
    let nt = dims[2] as i64;
    let base = [q[0].floor(), q[1].floor(), q[2].floor()];
    let frac = [q[0] - base[0], q[1] - base[1], q[2] - base[2]];
    let mut out = Sample { dir: [0.0; 3], value: 0.0, wsum: 0.0, seed_hit: None };
    for c in 0..if angular { 8 } else { 4 } {
        let bit = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
        let i = base[0] as i64 + bit[0] as i64;
        let j = base[1] as i64 + bit[1] as i64;
        if i < 0 || j < 0 || i >= dims[0] as i64 || j >= dims[1] as i64 {
            continue;
        }
        let k = if angular { (base[2] as i64 + bit[2] as i64).rem_euclid(nt) } else { 0 };
        let idx = [i as usize, j as usize, k as usize];
        let node = grid.flat(idx);
        if !res.is_accepted(node) {
            continue;
        }
        if res.is_seed(node) {
            out.seed_hit = Some(idx);
            continue;
        }
        let w: f64 = (0..3).map(|a| if bit[a] == 1 { frac[a] } else { 1.0 - frac[a] }).product();
        if w == 0.0 {
            continue;
        }
        if let Some(d) = node_direction(res, node) {
            for a in 0..3 {
                out.dir[a] += w * d[a];
            }
            out.value += w * res.values[node];
            out.wsum += w;
        }
    }
    out
}

/// Fallback move along the frozen graph: from the nearest accepted corner of
/// the cell containing `q` to its upwind neighbour of largest `ω`.
fn upwind_hop(grid: &Grid, res: &SolveResult, q: [f64; 3]) -> Option<([f64; 3], Sample)> {
    let dims = grid.dims();
    let nt = dims[2] as i64;
    let base = q.map(f64::floor);
    let mut best: Option<(f64, usize)> = None;
    for c in 0..if grid.is_angular() { 8 } else { 4 } {
        let bit = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
        let i = base[0] as i64 + bit[0] as i64;
        let j = base[1] as i64 + bit[1] as i64;
        if i < 0 || j < 0 || i >= dims[0] as i64 || j >= dims[1] as i64 {
            continue;
        }
        let k = if grid.is_angular() { (base[2] as i64 + bit[2] as i64).rem_euclid(nt) } else { 0 };
        let node = grid.flat([i as usize, j as usize, k as usize]);
        if !res.is_accepted(node) {
            continue;
        }
        let w: f64 = (0..3).map(|a| if bit[a] == 1 { q[a] - base[a] } else { 1.0 - (q[a] - base[a]) }).product();
        if best.map_or(true, |(bw, _)| w > bw) {
            best = Some((w, node));
        }
    }
    let (_, node) = best?;
    let target = if res.is_seed(node) {
        node
    } else {
        res.edges(node).iter().max_by(|a, b| a.omega().total_cmp(&b.omega()))?.neighbor as usize
    };
    let next = grid.unflat(target).map(|v| v as f64);
    Some((next, sample(grid, res, next)))
}

/// Traces the minimal path from `start` back to the seed set.
pub fn trace(grid: &Grid, res: &SolveResult, start: NodeIndex) -> Result<Path> {
    let start_flat = grid.flat(start);
    if !res.is_accepted(start_flat) || !res.values[start_flat].is_finite() {
        return Err(Error::Unreached(start_flat));
    }
    if res.is_seed(start_flat) {
        return Ok(Path { points: vec![physical(grid, start.map(|v| v as f64))], values: vec![res.values[start_flat]] });
    }
    let mut path = Path { points: Vec::new(), values: Vec::new() };
    let dims = grid.dims();
    let angular = grid.is_angular();
    let nt = dims[2] as f64;
    let budget = 20 * (dims[0] + dims[1] + if angular { dims[2] } else { 0 });
    let mut q = start.map(|v| v as f64);
    let mut here = sample(grid, res, q);

    for _ in 0..budget {
        if here.wsum > 0.0 {
            path.points.push(physical(grid, q));
            path.values.push(here.value / here.wsum);
        }
        if let Some(seed) = here.seed_hit {
            path.points.push(physical(grid, seed.map(|v| v as f64)));
            path.values.push(res.values[grid.flat(seed)]);
            return Ok(path);
        }
        let norm = here.dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if here.wsum == 0.0 || norm < 1e-12 * here.wsum {
            (q, here) = upwind_hop(grid, res, q).ok_or_else(|| Error::DegeneratePath("vanishing descent direction".into()))?;
            continue;
        }
        // Half-cell steps, shortened where the next position has no usable
        // corner (obstacle edges).
        let mut moved = false;
        for step in [0.5, 0.25, 0.125, 0.0625] {
            let mut next = q;
            for a in 0..3 {
                next[a] += step * here.dir[a] / norm;
            }
            next[0] = next[0].clamp(0.0, (dims[0] - 1) as f64);
            next[1] = next[1].clamp(0.0, (dims[1] - 1) as f64);
            if angular {
                next[2] = next[2].rem_euclid(nt);
            }
            let s = sample(grid, res, next);
            if s.wsum > 0.0 || s.seed_hit.is_some() {
                q = next;
                here = s;
                moved = true;
                break;
            }
        }
        if !moved {
            (q, here) =
                upwind_hop(grid, res, q).ok_or_else(|| Error::DegeneratePath("descent left the reached region".into()))?;
        }
    }
    Err(Error::IterationBudget(budget))
}

/// Resamples a polyline at uniform arc-length `step`.
pub fn resample(points: &[[f64; 2]], step: f64) -> Vec<[f64; 2]> {
    let pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .fold(Vec::new(), |mut acc: Vec<[f64; 2]>, p| {
            if acc.last().map_or(true, |&l| dist(l, p) > 0.0) {
                acc.push(p);
            }
            acc
        });
    if pts.len() < 2 {
        return pts;
    }
    let mut out = vec![pts[0]];
    let mut carry = 0.0;
    for w in pts.windows(2) {
        let l = dist(w[0], w[1]);
        let mut s = step - carry;
        while s <= l {
            let t = s / l;
            out.push([w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])]);
            s += step;
        }
        carry = l - (s - step);
    }
    out
}

/// Circumscribed-circle curvature of consecutive triples after resampling
/// at arc-length `step`.
pub fn discrete_curvature(points: &[[f64; 2]], step: f64) -> Result<Vec<f64>> {
    if points.len() < 3 {
        return Err(Error::DegeneratePath(format!("{} vertices, need at least 3", points.len())));
    }
    let r = resample(points, step);
    Ok(r.windows(3)
        .map(|t| {
            let (a, b, c) = (dist(t[0], t[1]), dist(t[1], t[2]), dist(t[0], t[2]));
            let cross = (t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]);
            if a * b * c == 0.0 { 0.0 } else { 2.0 * cross.abs() / (a * b * c) }
        })
        .collect())
}
