//! Single-pass fast marching for `max_controls Σ w (U(x) - U(x - e))₊² = 1`.
//!
//! Label-setting with a binary heap and lazy deletion. Only accepted values
//! enter a local update, so every recorded upwind edge points to a node
//! accepted strictly earlier. The recorded edges are the computational graph
//! used by [`crate::adjoint`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Offset};
use crate::stencils::{StencilField, MAX_CONTROL_LEN};

/// Marker for unreached and masked nodes.
pub const UNREACHED: f64 = f64::INFINITY;
pub const NOT_ACCEPTED: u32 = u32::MAX;

/// Root of `Σ_{a_i < u} w_i (u - a_i)² = 1` for `(w, a)` pairs sorted by `a`.
/// Returns the root and how many leading terms are active.
fn control_root(terms: &[(f64, f64)]) -> (f64, usize) {
    let (mut sw, mut swa, mut swa2) = (0.0, 0.0, 0.0);
    let mut root = UNREACHED;
    let mut used = 0;
    for (k, &(w, a)) in terms.iter().enumerate() {
        if !a.is_finite() || (k > 0 && root <= a) {
            break;
        }
        sw += w;
        swa += w * a;
        swa2 += w * a * a;
        let disc = (swa * swa - sw * (swa2 - 1.0)).max(0.0);
        root = (swa + disc.sqrt()) / sw;
        used = k + 1;
    }
    (root, used)
}

/// Local update over several controls, each a list of `(w, neighbour value)`;
/// returns the smallest control root, or +∞ without a finite neighbour.
pub fn local_update(controls: &[Vec<(f64, f64)>]) -> f64 {
    controls
        .iter()
        .map(|terms| {
            let mut t: Vec<(f64, f64)> = terms.iter().copied().filter(|&(w, _)| w > 0.0).collect();
            t.sort_by(|x, y| x.1.total_cmp(&y.1));
            control_root(&t).0
        })
        .fold(UNREACHED, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub node: usize,
    pub value: f64,
}

/// One active upwind edge of an accepted node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveEdge {
    pub neighbor: u32,
    pub offset: [i8; 3],
    /// Entry index within the active control.
    pub entry: u8,
    /// Scaled stencil weight `w = c²`.
    pub weight: f64,
    /// Upwind difference `U(x) - U(y) > 0`.
    pub delta: f64,
}

impl ActiveEdge {
    /// `ω = w Δ`.
    #[inline]
    pub fn omega(&self) -> f64 {
        self.weight * self.delta
    }

    pub fn offset(&self) -> Offset {
        self.offset.map(i32::from)
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub values: Vec<f64>,
    pub order: Vec<u32>,
    /// Acceptance rank per node, [`NOT_ACCEPTED`] otherwise.
    pub rank: Vec<u32>,
    /// Active control per node.
    pub control: Vec<u8>,
    edge_start: Vec<u32>,
    edges: Vec<ActiveEdge>,
    pub seeds: Vec<Seed>,
    is_seed: Vec<bool>,
}

impl SolveResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_accepted(&self, node: usize) -> bool {
        self.rank[node] != NOT_ACCEPTED
    }

    pub fn is_seed(&self, node: usize) -> bool {
        self.is_seed[node]
    }

    /// Active edges of an accepted node (empty for seeds and unreached nodes).
    pub fn edges(&self, node: usize) -> &[ActiveEdge] {
        match self.rank[node] {
            NOT_ACCEPTED => &[],
            r => &self.edges[self.edge_start[r as usize] as usize..self.edge_start[r as usize + 1] as usize],
        }
    }

    /// Range of this node's edges in the flat edge array.
    pub fn edge_span(&self, node: usize) -> std::ops::Range<usize> {
        match self.rank[node] {
            NOT_ACCEPTED => 0..0,
            r => self.edge_start[r as usize] as usize..self.edge_start[r as usize + 1] as usize,
        }
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// `Σ w Δ² - 1` at a non-seed accepted node.
    pub fn residual(&self, node: usize) -> f64 {
        self.edges(node).iter().map(|e| e.weight * e.delta * e.delta).sum::<f64>() - 1.0
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, u32);

impl Eq for Key {}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap; ties broken by node index.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Scratch {
    terms: [(f64, f64, u8, u32); MAX_CONTROL_LEN],
}

/// Evaluates the local update at `node` from accepted neighbours; when
/// `record` is set, also returns the winning control and its active edges.
fn update_node(
    grid: &Grid,
    field: &StencilField,
    values: &[f64],
    accepted: &[bool],
    node: usize,
    scratch: &mut Scratch,
    mut record: Option<&mut Vec<ActiveEdge>>,
) -> (f64, u8) {
    let idx = grid.unflat(node);
    let scale = field.scale(node);
    let mut best = UNREACHED;
    let mut best_control = 0u8;
    for (ci, control) in field.controls(node).iter().enumerate() {
        let mut n = 0;
        for (ei, en) in control.entries.iter().enumerate() {
            let Some(yi) = grid.shift(idx, en.offset.map(|v| -v)) else { continue };
            let y = grid.flat(yi);
            if !accepted[y] {
                continue;
            }
            scratch.terms[n] = (en.weight * scale, values[y], ei as u8, y as u32);
            n += 1;
        }
        let terms = &mut scratch.terms[..n];
        terms.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)));
        let mut pairs = [(0.0, 0.0); MAX_CONTROL_LEN];
        for (p, t) in pairs.iter_mut().zip(terms.iter()) {
            *p = (t.0, t.1);
        }
        let (root, used) = control_root(&pairs[..n]);
        if root < best {
            best = root;
            best_control = ci as u8;
            if let Some(out) = record.as_deref_mut() {
                out.clear();
                for t in &terms[..used] {
                    let delta = root - t.1;
                    if delta > 0.0 {
                        let en = &control.entries[t.2 as usize];
                        out.push(ActiveEdge {
                            neighbor: t.3,
                            offset: en.offset.map(|v| v as i8),
                            entry: t.2,
                            weight: t.0,
                            delta,
                        });
                    }
                }
            }
        }
    }
    (best, best_control)
}

/// Solves the discretized eikonal system from `seeds`.
pub fn fast_march(grid: &Grid, field: &StencilField, seeds: &[Seed]) -> Result<SolveResult> {
    let n = grid.len();
    let mut values = vec![UNREACHED; n];
    let mut accepted = vec![false; n];
    let mut is_seed = vec![false; n];
    let mut heap = BinaryHeap::new();
    for s in seeds {
        if s.node >= n {
            return Err(Error::IndexOutOfRange { index: vec![s.node], dims: vec![n] });
        }
        if grid.is_masked(s.node) {
            return Err(Error::MaskedNode(s.node));
        }
        if !(s.value >= 0.0 && s.value.is_finite()) {
            return Err(Error::InvalidParams(format!("seed value {} must be finite and >= 0", s.value)));
        }
        if !is_seed[s.node] || s.value < values[s.node] {
            values[s.node] = s.value;
            is_seed[s.node] = true;
            heap.push(Key(s.value, s.node as u32));
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut rank = vec![NOT_ACCEPTED; n];
    let mut control = vec![0u8; n];
    let mut edge_start = Vec::with_capacity(n + 1);
    edge_start.push(0u32);
    let mut edges: Vec<ActiveEdge> = Vec::with_capacity(3 * n);
    let mut scratch = Scratch { terms: [(0.0, 0.0, 0, 0); MAX_CONTROL_LEN] };
    let mut local_edges = Vec::with_capacity(MAX_CONTROL_LEN);

    while let Some(Key(val, x)) = heap.pop() {
        let x = x as usize;
        if accepted[x] || val > values[x] {
            continue;
        }
        if !is_seed[x] {
            let (u, c) = update_node(grid, field, &values, &accepted, x, &mut scratch, Some(&mut local_edges));
            // recomputed with more accepted neighbours; equal up to rounding
            debug_assert!((u - val).abs() <= 1e-9 * val.max(1.0), "{u} vs {val}");
            values[x] = u;
            control[x] = c;
            edges.extend_from_slice(&local_edges);
        }
        accepted[x] = true;
        rank[x] = order.len() as u32;
        order.push(x as u32);
        edge_start.push(edges.len() as u32);

        field.for_each_dependent(grid, x, |y| {
            if accepted[y] || grid.is_masked(y) || is_seed[y] {
                return;
            }
            let (u, _) = update_node(grid, field, &values, &accepted, y, &mut scratch, None);
            if u < values[y] {
                values[y] = u;
                heap.push(Key(u, y as u32));
            }
        });
    }

    Ok(SolveResult {
        values,
        order,
        rank,
        control,
        edge_start,
        edges,
        seeds: seeds.to_vec(),
        is_seed,
    })
}

/// Seeds at the snapped position of `point`, on every heading fiber for
/// angular grids.
pub fn point_seeds(grid: &Grid, point: [f64; 2]) -> Result<Vec<Seed>> {
    let idx = grid.snap(point, None)?;
    Ok((0..grid.ntheta())
        .map(|k| Seed { node: grid.flat([idx[0], idx[1], k]), value: 0.0 })
        .collect())
}
