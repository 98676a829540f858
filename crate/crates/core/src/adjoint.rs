//! Forward and reverse differentiation of a fast-marching solution with
//! respect to its stencil weights, with the active edges and controls frozen.
//!
//! Differentiating `Σ w (U(x) - U(y))² = 1` over the active edges gives
//! `Σ ω (dU(x) - dU(y) + Δ d ln c) = 0` with `ω = w Δ` and `w = c²`.
//! Scalar-cost models have `w ∝ C(x)⁻²`, hence `d ln c = -d ln C(x)`.

use crate::error::{Error, Result};
use crate::eikonal::{ActiveEdge, SolveResult};
use crate::grid::Grid;
use crate::stencils::{Model, StencilField};

/// `J = Σ coeff · U(node)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TargetFunctional {
    pub terms: Vec<(usize, f64)>,
}

impl TargetFunctional {
    pub fn single(node: usize) -> Self {
        TargetFunctional { terms: vec![(node, 1.0)] }
    }

    pub fn evaluate(&self, res: &SolveResult) -> f64 {
        self.terms.iter().map(|&(n, c)| c * res.values[n]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityField {
    /// `∂J/∂ln C(x)` for scalar-cost models.
    pub per_node: Vec<f64>,
    /// `∂J/∂w` per active edge, aligned with [`SolveResult::edge_span`].
    pub per_edge: Vec<f64>,
    /// Adjoint value `∂J/∂U(x)` accumulated at each node.
    pub adjoint: Vec<f64>,
}

fn omega_sum(edges: &[ActiveEdge]) -> f64 {
    edges.iter().map(ActiveEdge::omega).sum()
}

/// Tangent propagation for arbitrary per-edge `d ln c`.
pub fn forward_diff_edges(res: &SolveResult, dlnc: &[f64]) -> Result<Vec<f64>> {
    if dlnc.len() != res.edge_count() {
        return Err(Error::DimensionMismatch { expected: res.edge_count(), got: dlnc.len() });
    }
    let mut du = vec![0.0; res.len()];
    for &x in &res.order {
        let x = x as usize;
        let edges = res.edges(x);
        if edges.is_empty() {
            continue;
        }
        let span = res.edge_span(x);
        let mut num = 0.0;
        for (e, &d) in edges.iter().zip(&dlnc[span]) {
            let om = e.omega();
            num += om * du[e.neighbor as usize] - om * e.delta * d;
        }
        du[x] = num / omega_sum(edges);
    }
    Ok(du)
}

/// Tangent propagation for a per-node perturbation `d ln C` of a scalar cost.
pub fn forward_diff(res: &SolveResult, dlnc_node: &[f64]) -> Result<Vec<f64>> {
    if dlnc_node.len() != res.len() {
        return Err(Error::DimensionMismatch { expected: res.len(), got: dlnc_node.len() });
    }
    let mut du = vec![0.0; res.len()];
    for &x in &res.order {
        let x = x as usize;
        let edges = res.edges(x);
        if edges.is_empty() {
            continue;
        }
        let mut num = 0.0;
        let mut wd2 = 0.0;
        for e in edges {
            num += e.omega() * du[e.neighbor as usize];
            wd2 += e.omega() * e.delta;
        }
        du[x] = (num + dlnc_node[x] * wd2) / omega_sum(edges);
    }
    Ok(du)
}

/// Adjoint sweep in reverse acceptance order. Cost is linear in the number of
/// active edges.
pub fn reverse_diff(res: &SolveResult, target: &TargetFunctional) -> Result<SensitivityField> {
    let n = res.len();
    let mut lambda = vec![0.0; n];
    for &(node, c) in &target.terms {
        if node >= n || !res.is_accepted(node) {
            return Err(Error::Unreached(node));
        }
        if !c.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite target coefficient at {node}")));
        }
        lambda[node] += c;
    }
    let mut per_node = vec![0.0; n];
    let mut per_edge = vec![0.0; res.edge_count()];
    for &x in res.order.iter().rev() {
        let x = x as usize;
        let l = lambda[x];
        let edges = res.edges(x);
        if l == 0.0 || edges.is_empty() {
            continue;
        }
        let total = omega_sum(edges);
        let span = res.edge_span(x);
        let mut wd2 = 0.0;
        for (e, t) in edges.iter().zip(&mut per_edge[span]) {
            let om = e.omega();
            lambda[e.neighbor as usize] += l * om / total;
            // ∂J/∂ln c = -λ ω Δ / Σω and d ln c = dw / (2w).
            *t = -l * e.delta * e.delta / (2.0 * total);
            wd2 += om * e.delta;
        }
        per_node[x] = l * wd2 / total;
    }
    Ok(SensitivityField { per_node, per_edge, adjoint: lambda })
}

/// Chains per-edge weight sensitivities of a Riemannian solve into
/// `∂J/∂D` per node, `D = M⁻¹` the physical dual tensor. Selling weights are
/// `w_k = -⟨b_i, S D S b_j⟩` for the superbase pair `(i, j)` opposite `k`.
pub fn riemannian_dual_gradient(
    grid: &Grid,
    field: &StencilField,
    res: &SolveResult,
    sens: &SensitivityField,
) -> Result<Vec<[[f64; 2]; 2]>> {
    if field.model() != Model::Riemannian {
        return Err(Error::InvalidParams("tensor chaining needs a Riemannian field".into()));
    }
    let s = [1.0 / grid.steps()[0], 1.0 / grid.steps()[1]];
    let mut out = vec![[[0.0; 2]; 2]; res.len()];
    for &x in &res.order {
        let x = x as usize;
        let Some(sb) = field.superbase(x) else { continue };
        let control = &field.controls(x)[res.control[x] as usize];
        let span = res.edge_span(x);
        for (e, &t) in res.edges(x).iter().zip(&sens.per_edge[span]) {
            let k = control.entries[e.entry as usize].term as usize;
            let (i, j) = match k {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (bi, bj) = (sb[i], sb[j]);
            for a in 0..2 {
                for b in 0..2 {
                    let sym = 0.5 * (bi[a] as f64 * bj[b] as f64 + bj[a] as f64 * bi[b] as f64);
                    out[x][a][b] -= t * sym * s[a] * s[b];
                }
            }
        }
    }
    Ok(out)
}

/// `∂J/∂M = -D (∂J/∂D) D` for `D = M⁻¹`.
pub fn dual_to_metric_gradient(dual: &[[f64; 2]; 2], grad_dual: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut tmp = [[0.0; 2]; 2];
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            tmp[a][b] = (0..2).map(|c| dual[a][c] * grad_dual[c][b]).sum();
        }
    }
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = -(0..2).map(|c| tmp[a][c] * dual[c][b]).sum::<f64>();
        }
    }
    out
}
