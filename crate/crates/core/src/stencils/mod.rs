//! Weighted lattice stencils realising the discrete Hamiltonian
//! `max_controls Σ w · (U(x) - U(x - e))₊²` for the four metric models.
//!
//! All offsets and weights live in index coordinates. A physical dual vector
//! `p` corresponds to the index-space gradient `ĝ = diag(h) p`, and the
//! physical dual tensor `D` becomes `S D S` with `S = diag(1/h)`.

pub mod selling;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, NodeIndex, Offset};
pub use selling::{selling_decompose_2d, selling_decompose_3d, Decomposition, SellingTerm};

pub const MAX_CONTROL_LEN: usize = 12;
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Isotropic,
    Riemannian,
    ReedsSheppForward,
    Dubins,
}

impl Model {
    pub fn is_curvature(self) -> bool {
        matches!(self, Model::ReedsSheppForward | Model::Dubins)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilEntry {
    pub offset: Offset,
    pub weight: f64,
    /// Index of the Selling term the weight came from (or the axis for
    /// isotropic and angular entries).
    pub term: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Control {
    pub entries: Vec<StencilEntry>,
}

impl Control {
    /// `Σ w e eᵀ` over the entries.
    pub fn tensor(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for en in &self.entries {
            for a in 0..3 {
                for b in 0..3 {
                    m[a][b] += en.weight * en.offset[a] as f64 * en.offset[b] as f64;
                }
            }
        }
        m
    }

    /// `Σ w ⟨e, g⟩₊²` for an index-space gradient `g`.
    pub fn hamiltonian(&self, g: [f64; 3]) -> f64 {
        self.entries
            .iter()
            .map(|en| {
                let s: f64 = (0..3).map(|a| en.offset[a] as f64 * g[a]).sum();
                en.weight * s.max(0.0).powi(2)
            })
            .sum()
    }

    fn scaled(mut self, factor: f64) -> Self {
        for en in &mut self.entries {
            en.weight *= factor;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Stencil {
    pub controls: Vec<Control>,
}

impl Stencil {
    pub fn hamiltonian(&self, g: [f64; 3]) -> f64 {
        self.controls.iter().map(|c| c.hamiltonian(g)).fold(0.0, f64::max)
    }

    pub fn offsets(&self) -> impl Iterator<Item = Offset> + '_ {
        self.controls.iter().flat_map(|c| c.entries.iter().map(|e| e.offset))
    }

    fn scaled(self, factor: f64) -> Self {
        Stencil { controls: self.controls.into_iter().map(|c| c.scaled(factor)).collect() }
    }
}

/// Local model parameters at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub model: Model,
    /// Minimal turning radius (length units).
    pub rho: f64,
    /// Relaxation of the degenerate curvature tensors.
    pub epsilon: f64,
    /// Scalar cost `C` at the node (ignored by the Riemannian model).
    pub cost: f64,
    /// Physical dual tensor `D = M⁻¹` for the Riemannian model.
    pub dual_tensor: Option<[[f64; 2]; 2]>,
}

impl ModelParams {
    pub fn isotropic(cost: f64) -> Self {
        ModelParams { model: Model::Isotropic, rho: 1.0, epsilon: DEFAULT_EPSILON, cost, dual_tensor: None }
    }

    pub fn riemannian(dual_tensor: [[f64; 2]; 2]) -> Self {
        ModelParams {
            model: Model::Riemannian,
            rho: 1.0,
            epsilon: DEFAULT_EPSILON,
            cost: 1.0,
            dual_tensor: Some(dual_tensor),
        }
    }

    pub fn curvature(model: Model, rho: f64, epsilon: f64, cost: f64) -> Self {
        ModelParams { model, rho, epsilon, cost, dual_tensor: None }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return bad("cost must be positive and finite");
        }
        if self.model.is_curvature() {
            if !(self.rho > 0.0 && self.rho.is_finite()) {
                return bad("rho must be positive");
            }
            if !(0.0..=1.0).contains(&self.epsilon) {
                return bad("epsilon must lie in [0, 1]");
            }
        }
        if self.model == Model::Riemannian && self.dual_tensor.is_none() {
            return bad("Riemannian model needs a dual tensor");
        }
        Ok(())
    }
}

fn idx_scale(steps: [f64; 3]) -> [f64; 3] {
    [1.0 / steps[0], 1.0 / steps[1], 1.0 / steps[2]]
}

fn heading(theta: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [c, s]
}

/// Writes `v = s · e` with `e` a primitive integer vector, if possible with
/// `‖e‖∞ ≤ 12`.
fn integral_direction<const N: usize>(v: [f64; N]) -> Option<([i32; N], f64)> {
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if vmax == 0.0 {
        return None;
    }
    for m in 1..=MAX_CONTROL_LEN as i32 {
        let s = vmax / m as f64;
        let e = v.map(|x| (x / s).round() as i32);
        if (0..N).all(|a| (v[a] - s * e[a] as f64).abs() <= 1e-9 * vmax) {
            let g = e.iter().fold(0, |g, &x| gcd(g, x.abs()));
            return Some((e.map(|x| x / g), s * g as f64));
        }
    }
    None
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Appends one-sided entries: sign of each offset chosen so that
/// `⟨e, v⟩ ≥ 0`; ties contribute both signs with half weight.
fn push_one_sided(entries: &mut Vec<StencilEntry>, offset: Offset, weight: f64, v: [f64; 3], term: u8) {
    let dot: f64 = (0..3).map(|a| offset[a] as f64 * v[a]).sum();
    let norm_e: f64 = offset.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    let norm_v: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if dot.abs() <= 1e-12 * norm_e * norm_v {
        entries.push(StencilEntry { offset, weight: 0.5 * weight, term });
        entries.push(StencilEntry { offset: offset.map(|x| -x), weight: 0.5 * weight, term });
    } else if dot > 0.0 {
        entries.push(StencilEntry { offset, weight, term });
    } else {
        entries.push(StencilEntry { offset: offset.map(|x| -x), weight, term });
    }
}

fn push_two_sided(entries: &mut Vec<StencilEntry>, offset: Offset, weight: f64, term: u8) {
    entries.push(StencilEntry { offset, weight, term });
    entries.push(StencilEntry { offset: offset.map(|x| -x), weight, term });
}

/// Unit-cost isotropic geometry.
pub fn isotropic_geometry(steps: [f64; 3]) -> Stencil {
    let s = idx_scale(steps);
    let mut entries = Vec::with_capacity(4);
    push_two_sided(&mut entries, [1, 0, 0], s[0] * s[0], 0);
    push_two_sided(&mut entries, [0, 1, 0], s[1] * s[1], 1);
    Stencil { controls: vec![Control { entries }] }
}

/// Riemannian geometry for a physical dual tensor `D`; also returns the
/// obtuse superbase, through which the weights depend linearly on `D`.
pub fn riemannian_geometry(steps: [f64; 3], dual: [[f64; 2]; 2]) -> Result<(Stencil, [[i32; 2]; 3])> {
    let s = idx_scale(steps);
    let d = [
        [s[0] * dual[0][0] * s[0], s[0] * dual[0][1] * s[1]],
        [s[1] * dual[1][0] * s[0], s[1] * dual[1][1] * s[1]],
    ];
    let dec = selling_decompose_2d(&d)?;
    let mut entries = Vec::with_capacity(6);
    for t in &dec.terms {
        let term = (3 - t.pair.0 - t.pair.1) as u8;
        push_two_sided(&mut entries, [t.offset[0], t.offset[1], 0], t.weight, term);
    }
    let sb = [dec.superbase[0], dec.superbase[1], dec.superbase[2]];
    Ok((Stencil { controls: vec![Control { entries }] }, sb))
}

/// Unit-cost forward Reeds-Shepp geometry at heading `theta`.
pub fn reeds_shepp_geometry(steps: [f64; 3], theta: f64, rho: f64, epsilon: f64) -> Result<Stencil> {
    let s = idx_scale(steps);
    let n = heading(theta);
    let v = [n[0] * s[0], n[1] * s[1], 0.0];
    let mut entries = Vec::with_capacity(MAX_CONTROL_LEN);
    if epsilon == 0.0 {
        let (e, scale) = integral_direction([v[0], v[1]]).ok_or_else(|| {
            Error::InvalidParams("epsilon = 0 needs a lattice-aligned heading".into())
        })?;
        push_one_sided(&mut entries, [e[0], e[1], 0], scale * scale, v, 0);
    } else {
        let nperp = [-n[1], n[0]];
        let e2 = epsilon * epsilon;
        let mut d = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                d[a][b] = s[a] * (n[a] * n[b] + e2 * nperp[a] * nperp[b]) * s[b];
            }
        }
        let dec = selling_decompose_2d(&d)?;
        for (t_idx, t) in dec.terms.iter().enumerate() {
            push_one_sided(&mut entries, [t.offset[0], t.offset[1], 0], t.weight, v, t_idx as u8);
        }
    }
    let w_ang = (1.0 / (rho * steps[2])).powi(2);
    push_two_sided(&mut entries, [0, 0, 1], w_ang, 3);
    Ok(Stencil { controls: vec![Control { entries }] })
}

/// Unit-cost Dubins geometry at heading `theta`: one control per turning
/// direction.
pub fn dubins_geometry(steps: [f64; 3], theta: f64, rho: f64, epsilon: f64) -> Result<Stencil> {
    let s = idx_scale(steps);
    let n = heading(theta);
    let mut controls = Vec::with_capacity(2);
    for sigma in [1.0, -1.0] {
        let v = [n[0] * s[0], n[1] * s[1], sigma / rho * s[2]];
        let mut entries = Vec::with_capacity(MAX_CONTROL_LEN);
        if epsilon == 0.0 {
            let (e, scale) = integral_direction(v).ok_or_else(|| {
                Error::InvalidParams("epsilon = 0 needs a lattice-aligned control vector".into())
            })?;
            push_one_sided(&mut entries, e, scale * scale, v, 0);
        } else {
            let d = dubins_relaxed_tensor(v, epsilon);
            let dec = selling_decompose_3d(&d)?;
            for (t_idx, t) in dec.terms.iter().enumerate() {
                push_one_sided(&mut entries, t.offset, t.weight, v, t_idx as u8);
            }
        }
        controls.push(Control { entries });
    }
    Ok(Stencil { controls })
}

/// `v vᵀ + ε² ‖v‖² P⊥` with `P⊥` the projector orthogonal to `v`.
fn dubins_relaxed_tensor(v: [f64; 3], epsilon: f64) -> [[f64; 3]; 3] {
    let n2: f64 = v.iter().map(|x| x * x).sum();
    let e2 = epsilon * epsilon;
    let mut d = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let id = if a == b { 1.0 } else { 0.0 };
            d[a][b] = (1.0 - e2) * v[a] * v[b] + e2 * n2 * id;
        }
    }
    d
}

/// Stencil at a node for explicit local parameters.
pub fn build_stencil(grid: &Grid, node: NodeIndex, params: &ModelParams) -> Result<Stencil> {
    params.validate()?;
    let flat = grid.flat(grid.check_index(&node[..if grid.is_angular() { 3 } else { 2 }])?);
    if grid.is_masked(flat) {
        return Err(Error::MaskedNode(flat));
    }
    let steps = grid.steps();
    let theta = grid.theta_of(node[2]);
    let inv_c2 = params.cost.powi(-2);
    match params.model {
        Model::Isotropic => Ok(isotropic_geometry(steps).scaled(inv_c2)),
        Model::Riemannian => {
            Ok(riemannian_geometry(steps, params.dual_tensor.expect("validated"))?.0)
        }
        Model::ReedsSheppForward | Model::Dubins if !grid.is_angular() => Err(Error::InvalidParams(
            "curvature models need an angular axis".into(),
        )),
        Model::ReedsSheppForward => {
            Ok(reeds_shepp_geometry(steps, theta, params.rho, params.epsilon)?.scaled(inv_c2))
        }
        Model::Dubins => Ok(dubins_geometry(steps, theta, params.rho, params.epsilon)?.scaled(inv_c2)),
    }
}

/// The tensor `Σ w e eᵀ` each control of [`build_stencil`] is meant to
/// reproduce (two-sided entries count twice).
pub fn intended_tensors(steps: [f64; 3], theta: f64, params: &ModelParams) -> Vec<[[f64; 3]; 3]> {
    let s = idx_scale(steps);
    let inv_c2 = params.cost.powi(-2);
    let mut m = [[0.0; 3]; 3];
    match params.model {
        Model::Isotropic => {
            m[0][0] = 2.0 * s[0] * s[0] * inv_c2;
            m[1][1] = 2.0 * s[1] * s[1] * inv_c2;
            vec![m]
        }
        Model::Riemannian => {
            let d = params.dual_tensor.unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] = 2.0 * s[a] * d[a][b] * s[b];
                }
            }
            vec![m]
        }
        Model::ReedsSheppForward => {
            let n = heading(theta);
            let nperp = [-n[1], n[0]];
            let e2 = params.epsilon * params.epsilon;
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] = s[a] * (n[a] * n[b] + e2 * nperp[a] * nperp[b]) * s[b] * inv_c2;
                }
            }
            m[2][2] = 2.0 * (1.0 / (params.rho * steps[2])).powi(2) * inv_c2;
            vec![m]
        }
        Model::Dubins => {
            let n = heading(theta);
            [1.0, -1.0]
                .iter()
                .map(|sigma| {
                    let v = [n[0] * s[0], n[1] * s[1], sigma / params.rho * s[2]];
                    let mut d = dubins_relaxed_tensor(v, params.epsilon);
                    for row in &mut d {
                        for x in row.iter_mut() {
                            *x *= inv_c2;
                        }
                    }
                    d
                })
                .collect()
        }
    }
}

/// `2 H(x, p)` of the continuous model, for a physical dual vector
/// `p = (p̂, p_θ)`.
pub fn continuous_hamiltonian(theta: f64, params: &ModelParams, p: [f64; 3]) -> f64 {
    let inv_c2 = params.cost.powi(-2);
    match params.model {
        Model::Isotropic => inv_c2 * (p[0] * p[0] + p[1] * p[1]),
        Model::Riemannian => {
            let d = params.dual_tensor.unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
            p[0] * (d[0][0] * p[0] + d[0][1] * p[1]) + p[1] * (d[1][0] * p[0] + d[1][1] * p[1])
        }
        Model::ReedsSheppForward => {
            let n = heading(theta);
            let along = (p[0] * n[0] + p[1] * n[1]).max(0.0);
            inv_c2 * (along * along + (p[2] / params.rho).powi(2))
        }
        Model::Dubins => {
            let n = heading(theta);
            let a = (p[0] * n[0] + p[1] * n[1] + p[2].abs() / params.rho).max(0.0);
            inv_c2 * a * a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpEntry {
    pub offset: Offset,
    pub weight: f64,
}

/// Serializable view of one node's stencil, for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StencilDump {
    pub model: Model,
    pub node: Vec<usize>,
    pub theta: Option<f64>,
    pub controls: Vec<Vec<DumpEntry>>,
    /// Max relative deviation of `Σ w e eᵀ` from the intended tensor.
    pub reconstruction_error: f64,
}

pub fn stencil_dump(grid: &Grid, params: &ModelParams, node: NodeIndex) -> Result<StencilDump> {
    let stencil = build_stencil(grid, node, params)?;
    let theta = grid.theta_of(node[2]);
    let intended = intended_tensors(grid.steps(), theta, params);
    let reconstruction_error = stencil
        .controls
        .iter()
        .zip(&intended)
        .map(|(c, t)| tensor_rel_err(&c.tensor(), t))
        .fold(0.0, f64::max);
    Ok(StencilDump {
        model: params.model,
        node: if grid.is_angular() { node.to_vec() } else { node[..2].to_vec() },
        theta: grid.is_angular().then_some(theta),
        controls: stencil
            .controls
            .iter()
            .map(|c| c.entries.iter().map(|e| DumpEntry { offset: e.offset, weight: e.weight }).collect())
            .collect(),
        reconstruction_error,
    })
}

pub fn tensor_rel_err(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            num = num.max((a[r][c] - b[r][c]).abs());
            den = den.max(b[r][c].abs());
        }
    }
    if den == 0.0 { num } else { num / den }
}

#[derive(Debug, Clone)]
enum Layout {
    Uniform,
    ByTheta,
    ByNode,
}

/// Stencils for every node of a grid, with the reverse index the solver
/// needs to find the nodes depending on a freshly accepted one.
#[derive(Debug, Clone)]
pub struct StencilField {
    model: Model,
    layout: Layout,
    geometries: Vec<Stencil>,
    /// Per-node weight multiplier (`C⁻²` for scalar-cost models).
    scale: Vec<f64>,
    superbases: Vec<[[i32; 2]; 3]>,
    ntheta: usize,
    /// Reverse offsets per angular index (uniform/by-theta layouts).
    rev_offsets: Vec<Vec<Offset>>,
    /// Reverse neighbour lists in CSR form (by-node layout).
    rev_start: Vec<u32>,
    rev_nodes: Vec<u32>,
}

impl StencilField {
    /// Scalar-cost field: a fixed geometry (per heading for curvature models)
    /// scaled by `C⁻²` at each node. `costs` has one entry per node; masked
    /// nodes are ignored.
    pub fn scalar(grid: &Grid, model: Model, rho: f64, epsilon: f64, costs: &[f64]) -> Result<Self> {
        if costs.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: costs.len() });
        }
        let probe = ModelParams::curvature(model, rho, epsilon, 1.0);
        probe.validate()?;
        let steps = grid.steps();
        let (layout, geometries) = match model {
            Model::Isotropic => (Layout::Uniform, vec![isotropic_geometry(steps)]),
            Model::Riemannian => {
                return Err(Error::InvalidParams("Riemannian model needs tensors".into()))
            }
            _ if !grid.is_angular() => {
                return Err(Error::InvalidParams("curvature models need an angular axis".into()))
            }
            Model::ReedsSheppForward => (
                Layout::ByTheta,
                (0..grid.ntheta())
                    .map(|k| reeds_shepp_geometry(steps, grid.theta_of(k), rho, epsilon))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Model::Dubins => (
                Layout::ByTheta,
                (0..grid.ntheta())
                    .map(|k| dubins_geometry(steps, grid.theta_of(k), rho, epsilon))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let mut scale = Vec::with_capacity(costs.len());
        for (node, &c) in costs.iter().enumerate() {
            if grid.is_masked(node) {
                scale.push(0.0);
            } else if c > 0.0 && c.is_finite() {
                scale.push(1.0 / (c * c));
            } else {
                return Err(Error::InvalidParams(format!("cost {c} at node {node} is not positive")));
            }
        }
        let mut field = StencilField {
            model,
            layout,
            geometries,
            scale,
            superbases: Vec::new(),
            ntheta: grid.ntheta(),
            rev_offsets: Vec::new(),
            rev_start: Vec::new(),
            rev_nodes: Vec::new(),
        };
        field.build_reverse(grid);
        Ok(field)
    }

    /// Riemannian field on a planar grid from physical dual tensors
    /// `D = M⁻¹`, one per spatial cell (masked cells ignored).
    pub fn riemannian(grid: &Grid, duals: &[[[f64; 2]; 2]]) -> Result<Self> {
        if grid.is_angular() {
            return Err(Error::InvalidParams("Riemannian model is planar".into()));
        }
        if duals.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: duals.len() });
        }
        let steps = grid.steps();
        let mut geometries = Vec::with_capacity(duals.len());
        let mut superbases = Vec::with_capacity(duals.len());
        for (node, d) in duals.iter().enumerate() {
            if grid.is_masked(node) {
                geometries.push(Stencil::default());
                superbases.push([[0; 2]; 3]);
            } else {
                let (st, sb) = riemannian_geometry(steps, *d)?;
                geometries.push(st);
                superbases.push(sb);
            }
        }
        let mut field = StencilField {
            model: Model::Riemannian,
            layout: Layout::ByNode,
            geometries,
            scale: vec![1.0; grid.len()],
            superbases,
            ntheta: 1,
            rev_offsets: Vec::new(),
            rev_start: Vec::new(),
            rev_nodes: Vec::new(),
        };
        field.build_reverse(grid);
        Ok(field)
    }

    fn build_reverse(&mut self, grid: &Grid) {
        match self.layout {
            Layout::Uniform | Layout::ByTheta => {
                let nt = self.ntheta as i64;
                let mut rev: Vec<Vec<Offset>> = vec![Vec::new(); self.ntheta];
                for (gk, geom) in self.geometries.iter().enumerate() {
                    for e in geom.offsets() {
                        let targets: Vec<usize> = match self.layout {
                            Layout::Uniform => (0..self.ntheta).collect(),
                            _ => vec![(gk as i64 - e[2] as i64).rem_euclid(nt) as usize],
                        };
                        for k in targets {
                            if !rev[k].contains(&e) {
                                rev[k].push(e);
                            }
                        }
                    }
                }
                self.rev_offsets = rev;
            }
            Layout::ByNode => {
                let n = grid.len();
                let mut pairs: Vec<(u32, u32)> = Vec::new();
                for y in 0..n {
                    if grid.is_masked(y) {
                        continue;
                    }
                    let yi = grid.unflat(y);
                    let mut seen: Vec<usize> = Vec::new();
                    for e in self.geometries[y].offsets() {
                        if let Some(xi) = grid.shift(yi, e.map(|v| -v)) {
                            let x = grid.flat(xi);
                            if !seen.contains(&x) {
                                seen.push(x);
                                pairs.push((x as u32, y as u32));
                            }
                        }
                    }
                }
                pairs.sort_unstable();
                let mut start = vec![0u32; n + 1];
                for &(x, _) in &pairs {
                    start[x as usize + 1] += 1;
                }
                for i in 0..n {
                    start[i + 1] += start[i];
                }
                self.rev_start = start;
                self.rev_nodes = pairs.into_iter().map(|(_, y)| y).collect();
            }
        }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    #[inline]
    fn geometry_index(&self, node: usize) -> usize {
        match self.layout {
            Layout::Uniform => 0,
            Layout::ByTheta => node % self.ntheta,
            Layout::ByNode => node,
        }
    }

    #[inline]
    pub fn controls(&self, node: usize) -> &[Control] {
        &self.geometries[self.geometry_index(node)].controls
    }

    #[inline]
    pub fn scale(&self, node: usize) -> f64 {
        self.scale[node]
    }

    /// Stencil at a node with weights scaled.
    pub fn stencil(&self, node: usize) -> Stencil {
        self.geometries[self.geometry_index(node)].clone().scaled(self.scale[node])
    }

    /// Obtuse superbase of a Riemannian node.
    pub fn superbase(&self, node: usize) -> Option<[[i32; 2]; 3]> {
        self.superbases.get(node).copied()
    }

    /// Calls `f` for every node whose stencil reaches `node`.
    #[inline]
    pub fn for_each_dependent(&self, grid: &Grid, node: usize, mut f: impl FnMut(usize)) {
        match self.layout {
            Layout::ByNode => {
                let (a, b) = (self.rev_start[node] as usize, self.rev_start[node + 1] as usize);
                for &y in &self.rev_nodes[a..b] {
                    f(y as usize);
                }
            }
            _ => {
                let xi = grid.unflat(node);
                for &e in &self.rev_offsets[xi[2]] {
                    if let Some(yi) = grid.shift(xi, e) {
                        f(grid.flat(yi));
                    }
                }
            }
        }
    }

    pub fn max_offset_norm(&self) -> i32 {
        self.geometries
            .iter()
            .flat_map(|g| g.offsets())
            .flat_map(|e| e.into_iter())
            .map(i32::abs)
            .max()
            .unwrap_or(0)
    }
}
