//! Box-constrained ascent by projected L-BFGS.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the projected gradient norm falls below this.
    pub tolerance: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Sufficient-increase constant.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl AscentConfig {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        AscentConfig {
            memory: 10,
            max_iterations: 100,
            tolerance: 1e-10,
            lower,
            upper,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 40,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.memory == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("memory must be ≥ 1 and tolerance > 0".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidParams("line-search constants must lie in (0, 1)".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.lower.len().min(self.upper.len()) });
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParams("lower bound above upper bound".into()));
        }
        Ok(())
    }

    pub fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    /// `‖P(x + g) - x‖₂`.
    pub fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .zip(self.lower.iter().zip(&self.upper))
            .map(|((x, g), (l, u))| ((x + g).clamp(*l, *u) - x).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    /// Euclidean length of the accepted step.
    pub step: f64,
    /// Projected gradient norm at the iterate.
    pub gradient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    IterationBudget,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Starting point first, then one record per accepted iterate.
    pub history: Vec<IterationRecord>,
    pub stop: StopReason,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Two-loop recursion applied to `g` restricted to the free variables.
fn direction(pairs: &VecDeque<(Vec<f64>, Vec<f64>)>, g: &[f64], free: &[bool]) -> Vec<f64> {
    let mut q: Vec<f64> = g.iter().zip(free).map(|(g, &f)| if f { *g } else { 0.0 }).collect();
    let restrict = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(v, &f)| if f { *v } else { 0.0 }).collect() };
    let rp: Vec<(Vec<f64>, Vec<f64>)> = pairs.iter().map(|(s, y)| (restrict(s), restrict(y))).collect();
    let mut alpha = Vec::with_capacity(rp.len());
    for (s, y) in rp.iter().rev() {
        let sy = dot(s, y);
        if sy <= 0.0 {
            alpha.push(0.0);
            continue;
        }
        let a = dot(s, &q) / sy;
        q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
        alpha.push(a);
    }
    if let Some((s, y)) = rp.last() {
        let (sy, yy) = (dot(s, y), dot(y, y));
        if sy > 0.0 && yy > 0.0 {
            q.iter_mut().for_each(|v| *v *= sy / yy);
        }
    }
    for ((s, y), a) in rp.iter().zip(alpha.iter().rev()) {
        let sy = dot(s, y);
        if sy <= 0.0 {
            continue;
        }
        let b = dot(y, &q) / sy;
        q.iter_mut().zip(s).for_each(|(q, s)| *q += (a - b) * s);
    }
    q
}

/// Maximises `f` over the box of `cfg`. `f` returns the value and gradient;
/// errors at trial points count as failed steps.
pub fn maximize<F>(mut f: F, x0: &[f64], cfg: &AscentConfig) -> Result<AscentResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    cfg.validate(n)?;
    if x0.iter().zip(cfg.lower.iter().zip(&cfg.upper)).any(|(x, (l, u))| x < l || x > u) {
        return Err(Error::InvalidParams("starting point outside the bounds".into()));
    }
    let mut x = x0.to_vec();
    let (mut value, mut g) = f(&x)?;
    let mut evaluations = 1;
    if !value.is_finite() || g.len() != n || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart);
    }
    let mut history = vec![IterationRecord { iteration: 0, value, step: 0.0, gradient_norm: cfg.projected_gradient_norm(&x, &g) }];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>)> = VecDeque::new();
    let mut stop = StopReason::IterationBudget;

    for it in 1..=cfg.max_iterations {
        if cfg.projected_gradient_norm(&x, &g) < cfg.tolerance {
            stop = StopReason::Converged;
            break;
        }
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= cfg.lower[i] && g[i] < 0.0) || (x[i] >= cfg.upper[i] && g[i] > 0.0)))
            .collect();
        let mut accepted = None;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !pairs.is_empty();
            if attempt == 1 && pairs.is_empty() {
                break;
            }
            let mut d = if use_memory { direction(&pairs, &g, &free) } else { direction(&VecDeque::new(), &g, &free) };
            if dot(&d, &g) <= 0.0 {
                d = g.iter().zip(&free).map(|(g, &f)| if f { *g } else { 0.0 }).collect();
            }
            let mut alpha = if use_memory { 1.0 } else { 1.0 / dot(&d, &d).sqrt().max(1.0) };
            for _ in 0..=cfg.max_backtracks {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + alpha * d).collect();
                cfg.project(&mut trial);
                let step: Vec<f64> = trial.iter().zip(&x).map(|(t, x)| t - x).collect();
                let predicted = dot(&g, &step);
                if predicted <= 0.0 {
                    alpha *= cfg.backtrack;
                    continue;
                }
                evaluations += 1;
                match f(&trial) {
                    Ok((v, gt)) if v.is_finite() && gt.len() == n && v >= value + cfg.armijo * predicted => {
                        accepted = Some((trial, v, gt, step));
                        break;
                    }
                    _ => alpha *= cfg.backtrack,
                }
            }
            if accepted.is_some() {
                break;
            }
            pairs.clear();
        }
        let Some((xn, vn, gn, s)) = accepted else {
            stop = StopReason::LineSearchFailed;
            break;
        };
        // Curvature pair for the minimisation of -f.
        let y: Vec<f64> = g.iter().zip(&gn).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            pairs.push_back((s.clone(), y));
            if pairs.len() > cfg.memory {
                pairs.pop_front();
            }
        }
        x = xn;
        value = vn;
        g = gn;
        history.push(IterationRecord {
            iteration: it,
            value,
            step: dot(&s, &s).sqrt(),
            gradient_norm: cfg.projected_gradient_norm(&x, &g),
        });
    }
    if stop == StopReason::IterationBudget && cfg.projected_gradient_norm(&x, &g) < cfg.tolerance {
        stop = StopReason::Converged;
    }
    Ok(AscentResult { x, value, gradient: g, history, stop, evaluations })
}
