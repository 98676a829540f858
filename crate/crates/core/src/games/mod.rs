//! Sensor placement games: the detection value `𝔠(ξ, Γ)` of the cheapest
//! round trip from the source point to the keypoint and back, and its
//! gradient with respect to the sensor parameters.

mod sensors;

pub use sensors::{
    cost_field_camera, cost_field_paint, cost_field_radar, line_of_sight, radar_metric, radar_term, CameraSet,
    Density, PaintField, RadarCost, RadarSet, DEFAULT_BACKGROUND, DEFAULT_COST_CAP, PAINT_BOUNDS, RADAR_REGION,
};

use serde::{Deserialize, Serialize};

use crate::adjoint::{dual_to_metric_gradient, reverse_diff, riemannian_dual_gradient, TargetFunctional};
use crate::eikonal::{fast_march, point_seeds, SolveResult};
use crate::error::{Error, Result};
use crate::geodesic::{trace, Path};
use crate::grid::{Grid, NodeIndex, Point};
use crate::stencils::{Model, StencilField, DEFAULT_EPSILON};

/// Automatic temperature as a fraction of the smallest round-trip value.
pub const AUTO_TAU_FRACTION: f64 = 0.01;

fn default_rho() -> f64 {
    0.3
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_seed() -> [f64; 2] {
    [0.2, 0.5]
}
fn default_keypoint() -> [f64; 2] {
    [1.8, 0.5]
}
fn yes() -> bool {
    true
}
fn default_cap() -> f64 {
    DEFAULT_COST_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub model: Model,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Source point.
    #[serde(default = "default_seed")]
    pub seed: [f64; 2],
    #[serde(default = "default_keypoint")]
    pub keypoint: [f64; 2],
    /// Soft-min temperature over headings; `None` uses
    /// `AUTO_TAU_FRACTION · min` of the round-trip values.
    #[serde(default)]
    pub tau: Option<f64>,
    /// Spread the keypoint uniformly over its 3×3 box of cells.
    #[serde(default = "yes")]
    pub blur: bool,
    #[serde(default = "default_cap")]
    pub cost_cap: f64,
}

impl GameSpec {
    pub fn new(model: Model) -> Self {
        GameSpec {
            model,
            rho: default_rho(),
            epsilon: DEFAULT_EPSILON,
            seed: default_seed(),
            keypoint: default_keypoint(),
            tau: None,
            blur: true,
            cost_cap: DEFAULT_COST_CAP,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if let Some(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParams(format!("soft-min temperature {t}")));
            }
        }
        if !(self.cost_cap > 0.0) {
            return Err(Error::InvalidParams(format!("cost cap {}", self.cost_cap)));
        }
        let s = grid.snap(self.seed, None)?;
        let k = grid.snap(self.keypoint, None)?;
        if s[..2] == k[..2] {
            return Err(Error::InvalidParams("source point and keypoint share a cell".into()));
        }
        if self.model.is_curvature() != grid.is_angular() {
            return Err(Error::InvalidParams(format!("model {:?} does not match the grid", self.model)));
        }
        if grid.is_angular() && grid.ntheta() % 2 != 0 {
            return Err(Error::InvalidParams("the heading count must be even".into()));
        }
        Ok(())
    }
}

/// The first player's strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SensorConfig {
    /// No intervention: unit cost.
    Free,
    Paint(PaintField),
    Camera(CameraSet),
    Radar(RadarSet),
}

impl SensorConfig {
    /// Optimisation variables: densities per cell, or sensor coordinates.
    pub fn params(&self, grid: &Grid) -> Result<Vec<f64>> {
        Ok(match self {
            SensorConfig::Free => Vec::new(),
            SensorConfig::Paint(p) => p.cells(grid)?,
            SensorConfig::Camera(c) => c.positions.iter().flatten().copied().collect(),
            SensorConfig::Radar(r) => r.positions.iter().flatten().copied().collect(),
        })
    }

    pub fn with_params(&self, x: &[f64]) -> SensorConfig {
        let points = || x.chunks(2).map(|c| [c[0], c[1]]).collect();
        match self {
            SensorConfig::Free => SensorConfig::Free,
            SensorConfig::Paint(p) => SensorConfig::Paint(PaintField { density: Density::Map(x.to_vec()), ..p.clone() }),
            SensorConfig::Camera(c) => SensorConfig::Camera(CameraSet { positions: points(), ..c.clone() }),
            SensorConfig::Radar(r) => SensorConfig::Radar(RadarSet { positions: points(), ..r.clone() }),
        }
    }

    /// Box constraints on [`SensorConfig::params`]. Cameras range over the
    /// cell centres of the rectangle, radars over their region.
    pub fn bounds(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
        let n = match self {
            SensorConfig::Free => 0,
            SensorConfig::Paint(_) => grid.spatial_len(),
            SensorConfig::Camera(c) => c.positions.len(),
            SensorConfig::Radar(r) => r.positions.len(),
        };
        let (lo, hi) = match self {
            SensorConfig::Free => return (Vec::new(), Vec::new()),
            SensorConfig::Paint(p) => return (vec![p.bounds[0]; n], vec![p.bounds[1]; n]),
            SensorConfig::Camera(_) => {
                let h = grid.steps();
                let (l, u) = (grid.lower(), grid.upper());
                ([l[0] + 0.5 * h[0], l[1] + 0.5 * h[1]], [u[0] - 0.5 * h[0], u[1] - 0.5 * h[1]])
            }
            SensorConfig::Radar(r) => (r.region.lower, r.region.upper),
        };
        (lo.repeat(n), hi.repeat(n))
    }
}

/// `-τ ln Σ exp(-vᵢ/τ)` over the finite entries, with the weights
/// `∂/∂vᵢ` (zero for infinite entries).
pub fn softmin(values: &[f64], tau: f64) -> Result<(f64, Vec<f64>)> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParams(format!("soft-min temperature {tau}")));
    }
    let m = values.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    if !m.is_finite() {
        return Err(Error::SoftminEmpty);
    }
    let mut w: Vec<f64> = values
        .iter()
        .map(|&v| if v.is_finite() { (-(v - m) / tau).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok((m - tau * total.ln(), w))
}

/// Soft-min at temperature `frac · min v`, with the temperature's own
/// dependence folded into the weights.
pub fn softmin_auto(values: &[f64], frac: f64) -> Result<(f64, Vec<f64>, f64)> {
    let (arg, m) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .fold((usize::MAX, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    if arg == usize::MAX {
        return Err(Error::SoftminEmpty);
    }
    let tau = frac * m;
    let (s, mut w) = softmin(values, tau)?;
    let mean: f64 = values.iter().zip(&w).filter(|(v, _)| v.is_finite()).map(|(v, w)| v * w).sum();
    w[arg] += frac * (s - mean) / tau;
    Ok((s, w, tau))
}

/// Cost inputs of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CostField {
    /// Per node.
    Scalar(Vec<f64>),
    /// Planar metric tensors per cell.
    Tensor(Vec<[[f64; 2]; 2]>),
}

struct Chain {
    cost: CostField,
    /// Per cell, per sensor, `∂C/∂q` (camera) — empty otherwise.
    camera_grad: Vec<Vec<[f64; 2]>>,
}

fn build_costs(grid: &Grid, spec: &GameSpec, sensors: &SensorConfig) -> Result<Chain> {
    let scalar_only = |c: Vec<f64>| -> Result<Chain> {
        if spec.model == Model::Riemannian {
            return Err(Error::InvalidParams("the riemannian model is reserved for the radar game".into()));
        }
        Ok(Chain { cost: CostField::Scalar(c), camera_grad: Vec::new() })
    };
    match sensors {
        SensorConfig::Free => scalar_only(vec![1.0; grid.len()]),
        SensorConfig::Paint(p) => scalar_only(cost_field_paint(grid, p)?),
        SensorConfig::Camera(c) => {
            let (cells, grad) = sensors::camera_cells(grid, c, spec.cost_cap)?;
            let mut chain = scalar_only(sensors::broadcast(grid, &cells))?;
            chain.camera_grad = grad;
            Ok(chain)
        }
        SensorConfig::Radar(r) => Ok(Chain {
            cost: match cost_field_radar(grid, r, spec.model, spec.cost_cap)? {
                RadarCost::Scalar(c) => CostField::Scalar(c),
                RadarCost::Tensor(m) => CostField::Tensor(m),
            },
            camera_grad: Vec::new(),
        }),
    }
}

/// The cost field seen by the second player.
pub fn cost_field(grid: &Grid, spec: &GameSpec, sensors: &SensorConfig) -> Result<CostField> {
    Ok(build_costs(grid, spec, sensors)?.cost)
}

fn inverse(m: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0 && m[0][0] > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

fn stencil_field(grid: &Grid, spec: &GameSpec, cost: &CostField) -> Result<StencilField> {
    match cost {
        CostField::Scalar(c) => StencilField::scalar(grid, spec.model, spec.rho, spec.epsilon, c),
        CostField::Tensor(m) => {
            let duals = m
                .iter()
                .enumerate()
                .map(|(c, m)| if grid.is_masked(c) { Ok([[1.0, 0.0], [0.0, 1.0]]) } else { inverse(m) })
                .collect::<Result<Vec<_>>>()?;
            StencilField::riemannian(grid, &duals)
        }
    }
}

/// Maximum worker threads, from `EIKGAME_THREADS` when set.
pub fn thread_budget() -> usize {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("EIKGAME_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .map_or(hw, |n| n.min(hw))
}

/// Fast-marching solves behind one evaluation.
#[derive(Debug, Clone)]
pub struct GameSolves {
    /// Outbound value `u⁺`.
    pub forward: SolveResult,
    /// Value with the cost re-indexed by a half turn, when it differs from
    /// the outbound cost; `u⁻(p, θ)` reads it at heading `θ + π`.
    pub flipped: Option<SolveResult>,
    /// Keypoint node at the heading carrying the largest soft-min weight.
    pub keypoint: NodeIndex,
}

impl GameSolves {
    fn backward(&self) -> &SolveResult {
        self.flipped.as_ref().unwrap_or(&self.forward)
    }

    /// Outbound and return paths, both listed from the source point to the
    /// keypoint.
    pub fn paths(&self, grid: &Grid) -> Result<(Path, Path)> {
        let out = trace(grid, &self.forward, self.keypoint)?.reversed();
        if !grid.is_angular() {
            return Ok((out.clone(), out));
        }
        let half = grid.ntheta() / 2;
        let [i, j, k] = self.keypoint;
        let mut back = trace(grid, self.backward(), [i, j, (k + half) % grid.ntheta()])?;
        for p in &mut back.points {
            p.theta = p.theta.map(|t| (t + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI));
        }
        Ok((out, back.reversed()))
    }
}

#[derive(Debug, Clone)]
pub struct ObjectiveResult {
    /// `𝔠(ξ, Γ)`.
    pub value: f64,
    /// Paint game: value minus the paint supply `Σ ξ h²`.
    pub net: Option<f64>,
    /// Gradient of [`ObjectiveResult::objective`] w.r.t. the parameters.
    pub gradient: Vec<f64>,
    /// `∂𝔠/∂ln C` summed over headings, per spatial cell.
    pub sensitivity: Vec<f64>,
    /// Temperature used over headings (zero for planar models).
    pub tau: f64,
    pub solves: GameSolves,
}

impl ObjectiveResult {
    /// The quantity maximised by the first player.
    pub fn objective(&self) -> f64 {
        self.net.unwrap_or(self.value)
    }
}

fn blur_cells(grid: &Grid, spec: &GameSpec) -> Result<Vec<(usize, usize)>> {
    let [ki, kj, _] = grid.snap(spec.keypoint, None)?;
    let [nx, ny, _] = grid.dims();
    let r: i64 = if spec.blur { 1 } else { 0 };
    let mut cells = Vec::new();
    for di in -r..=r {
        for dj in -r..=r {
            let (i, j) = (ki as i64 + di, kj as i64 + dj);
            if i >= 0 && j >= 0 && i < nx as i64 && j < ny as i64 && !grid.is_cell_masked(i as usize, j as usize) {
                cells.push((i as usize, j as usize));
            }
        }
    }
    Ok(cells)
}

fn solve_pair(grid: &Grid, spec: &GameSpec, cost: &CostField) -> Result<(SolveResult, Option<SolveResult>)> {
    let seeds = point_seeds(grid, spec.seed)?;
    let flipped_cost = match cost {
        CostField::Scalar(c) if grid.is_angular() => {
            let nt = grid.ntheta();
            let f: Vec<f64> = (0..c.len())
                .map(|n| {
                    let k = n % nt;
                    c[n - k + (k + nt / 2) % nt]
                })
                .collect();
            (f != *c).then_some(CostField::Scalar(f))
        }
        _ => None,
    };
    let solve = |cost: &CostField| -> Result<SolveResult> { fast_march(grid, &stencil_field(grid, spec, cost)?, &seeds) };
    match flipped_cost {
        None => Ok((solve(cost)?, None)),
        Some(fc) if thread_budget() > 1 => std::thread::scope(|s| {
            let other = s.spawn(|| solve(&fc));
            let a = solve(cost)?;
            let b = other.join().expect("solver thread panicked")?;
            Ok((a, Some(b)))
        }),
        Some(fc) => Ok((solve(cost)?, Some(solve(&fc)?))),
    }
}

/// Evaluates the game value and its gradient for the given sensors.
pub fn evaluate(grid: &Grid, spec: &GameSpec, sensors: &SensorConfig) -> Result<ObjectiveResult> {
    spec.validate(grid)?;
    let chain = build_costs(grid, spec, sensors)?;
    let (forward, flipped) = solve_pair(grid, spec, &chain.cost)?;
    let cells = blur_cells(grid, spec)?;
    let nt = grid.ntheta();
    let half = nt / 2;
    let beta = 1.0 / cells.len().max(1) as f64;
    let backward = flipped.as_ref().unwrap_or(&forward);

    // Round-trip value per heading, averaged over the keypoint box.
    let round_trip: Vec<f64> = (0..nt)
        .map(|k| {
            cells
                .iter()
                .map(|&(i, j)| {
                    let out = forward.values[grid.flat([i, j, k])];
                    let back = if grid.is_angular() {
                        backward.values[grid.flat([i, j, (k + half) % nt])]
                    } else {
                        out
                    };
                    beta * (out + back)
                })
                .sum()
        })
        .collect();
    if round_trip.iter().all(|v| !v.is_finite()) {
        return Err(Error::UnreachableKeypoint);
    }
    let (value, weights, tau) = if !grid.is_angular() {
        (round_trip[0], vec![1.0], 0.0)
    } else if let Some(t) = spec.tau {
        let (v, w) = softmin(&round_trip, t)?;
        (v, w, t)
    } else {
        softmin_auto(&round_trip, AUTO_TAU_FRACTION)?
    };

    let mut fwd_target = TargetFunctional::default();
    let mut bwd_target = TargetFunctional::default();
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for &(i, j) in &cells {
            fwd_target.terms.push((grid.flat([i, j, k]), w * beta));
            let back = grid.flat([i, j, if grid.is_angular() { (k + half) % nt } else { k }]);
            if flipped.is_some() {
                bwd_target.terms.push((back, w * beta));
            } else {
                fwd_target.terms.push((back, w * beta));
            }
        }
    }
    let fwd_sens = reverse_diff(&forward, &fwd_target)?;
    let bwd_sens = flipped.as_ref().map(|f| reverse_diff(f, &bwd_target)).transpose()?;

    // ∂𝔠/∂ln C per node of the outbound cost.
    let mut dlnc = fwd_sens.per_node.clone();
    if let Some(b) = &bwd_sens {
        for (n, d) in dlnc.iter_mut().enumerate() {
            let k = n % nt;
            *d += b.per_node[n - k + (k + half) % nt];
        }
    }
    let sensitivity: Vec<f64> = dlnc.chunks(nt).map(|c| c.iter().sum()).collect();

    let mut net = None;
    let gradient = match (sensors, &chain.cost) {
        (SensorConfig::Free, _) => Vec::new(),
        (SensorConfig::Paint(p), _) => {
            let xi = p.cells(grid)?;
            let area = grid.steps()[0] * grid.steps()[1];
            let supply: f64 = xi.iter().enumerate().filter(|&(c, _)| !grid.is_masked(c * nt)).map(|(_, x)| x * area).sum();
            net = Some(value - supply);
            (0..xi.len())
                .map(|c| if grid.is_masked(c * nt) { 0.0 } else { sensitivity[c] / xi[c] - area })
                .collect()
        }
        (SensorConfig::Camera(cams), CostField::Scalar(cost)) => {
            let mut g = vec![0.0; 2 * cams.positions.len()];
            for (c, dq) in chain.camera_grad.iter().enumerate() {
                if grid.is_masked(c * nt) || sensitivity[c] == 0.0 {
                    continue;
                }
                let f = sensitivity[c] / cost[c * nt];
                for (m, d) in dq.iter().enumerate() {
                    g[2 * m] += f * d[0];
                    g[2 * m + 1] += f * d[1];
                }
            }
            g
        }
        (SensorConfig::Radar(r), CostField::Scalar(cost)) => {
            let dmin = 2.0 * grid.h();
            let mut g = vec![0.0; 2 * r.positions.len()];
            for (n, &s) in dlnc.iter().enumerate() {
                if s == 0.0 || grid.is_masked(n) || cost[n] >= spec.cost_cap {
                    continue;
                }
                let [i, j, k] = grid.unflat(n);
                let p = grid.cell_center(i, j);
                let th = grid.theta_of(k);
                let v = [th.cos(), th.sin()];
                // C = √S, so ∂ln C/∂q = ∂S/∂q / (2 C²).
                let f = s / (2.0 * cost[n] * cost[n]);
                for (m, q) in r.positions.iter().enumerate() {
                    let (_, dq) = radar_term([q[0] - p[0], q[1] - p[1]], v, r.delta, dmin);
                    g[2 * m] += f * dq[0];
                    g[2 * m + 1] += f * dq[1];
                }
            }
            g
        }
        (SensorConfig::Radar(r), CostField::Tensor(metrics)) => {
            let field = stencil_field(grid, spec, &chain.cost)?;
            let gd = riemannian_dual_gradient(grid, &field, &forward, &fwd_sens)?;
            let dmin = 2.0 * grid.h();
            let mut g = vec![0.0; 2 * r.positions.len()];
            for (n, gd) in gd.iter().enumerate() {
                if grid.is_masked(n) || gd.iter().flatten().all(|&v| v == 0.0) {
                    continue;
                }
                let gm = dual_to_metric_gradient(&inverse(&metrics[n])?, gd);
                let [i, j, _] = grid.unflat(n);
                let (_, dm) = radar_metric(grid.cell_center(i, j), r, dmin);
                for (m, dm) in dm.iter().enumerate() {
                    for c in 0..2 {
                        g[2 * m + c] += (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| gm[a][b] * dm[c][a][b]).sum::<f64>();
                    }
                }
            }
            g
        }
        (SensorConfig::Camera(_), CostField::Tensor(_)) => unreachable!("camera costs are scalar"),
    };

    let best_k = weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &w)| if w > acc.1 { (k, w) } else { acc })
        .0;
    let [ki, kj, _] = grid.snap(spec.keypoint, None)?;
    Ok(ObjectiveResult {
        value,
        net,
        gradient,
        sensitivity,
        tau,
        solves: GameSolves { forward, flipped, keypoint: [ki, kj, best_k] },
    })
}

/// Physical location of a spatial cell index.
pub fn cell_point(grid: &Grid, cell: usize) -> Point {
    let ny = grid.dims()[1];
    let [x, y] = grid.cell_center(cell / ny, cell % ny);
    Point { x, y, theta: None }
}
