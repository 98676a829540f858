#![allow(dead_code)]

//! Closed-form Dubins shortest paths (the six CSC/CCC words), each word
//! checked by integrating its segments to the requested end configuration.

use std::f64::consts::PI;

fn m2pi(a: f64) -> f64 {
    a.rem_euclid(2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Seg {
    L,
    S,
    R,
}

#[derive(Debug, Clone, Copy)]
pub struct Word {
    pub segs: [Seg; 3],
    /// Normalised segment lengths (angles for turns, length / ρ for S).
    pub params: [f64; 3],
}

impl Word {
    pub fn length(&self, rho: f64) -> f64 {
        rho * self.params.iter().sum::<f64>()
    }
}

/// Candidate words between two configurations `(x, y, heading)`.
pub fn words(q0: [f64; 3], q1: [f64; 3], rho: f64) -> Vec<Word> {
    let (dx, dy) = (q1[0] - q0[0], q1[1] - q0[1]);
    let d = (dx * dx + dy * dy).sqrt() / rho;
    let th = if d > 0.0 { m2pi(dy.atan2(dx)) } else { 0.0 };
    let a = m2pi(q0[2] - th);
    let b = m2pi(q1[2] - th);
    let (sa, sb, ca, cb) = (a.sin(), b.sin(), a.cos(), b.cos());
    let cab = (a - b).cos();
    let mut out = Vec::new();
    use Seg::*;
    // LSL
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
    if p2 >= 0.0 {
        let tmp = (cb - ca).atan2(d + sa - sb);
        out.push(Word { segs: [L, S, L], params: [m2pi(-a + tmp), p2.sqrt(), m2pi(b - tmp)] });
    }
    // RSR
    let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
    if p2 >= 0.0 {
        let tmp = (ca - cb).atan2(d - sa + sb);
        out.push(Word { segs: [R, S, R], params: [m2pi(a - tmp), p2.sqrt(), m2pi(-b + tmp)] });
    }
    // LSR
    let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
        out.push(Word { segs: [L, S, R], params: [m2pi(-a + tmp), p, m2pi(-b + tmp)] });
    }
    // RSL
    let p2 = d * d - 2.0 + 2.0 * cab - 2.0 * d * (sa + sb);
    if p2 >= 0.0 {
        let p = p2.sqrt();
        let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
        out.push(Word { segs: [R, S, L], params: [m2pi(a - tmp), p, m2pi(b - tmp)] });
    }
    // RLR
    let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
    if tmp.abs() <= 1.0 {
        let p = m2pi(2.0 * PI - tmp.acos());
        let t = m2pi(a - (ca - cb).atan2(d - sa + sb) + p / 2.0);
        out.push(Word { segs: [R, L, R], params: [t, p, m2pi(a - b - t + p)] });
    }
    // LRL
    let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
    if tmp.abs() <= 1.0 {
        let p = m2pi(2.0 * PI - tmp.acos());
        let t = m2pi(-a - (ca - cb).atan2(d + sa - sb) + p / 2.0);
        out.push(Word { segs: [L, R, L], params: [t, p, m2pi(b - a - t + p)] });
    }
    out
}

/// Samples the path of a word at arc-length spacing at most `ds`.
pub fn sample(q0: [f64; 3], w: &Word, rho: f64, ds: f64) -> Vec<[f64; 3]> {
    let mut q = q0;
    let mut pts = vec![q];
    for (seg, &par) in w.segs.iter().zip(&w.params) {
        let len = par * rho;
        let n = ((len / ds).ceil() as usize).max(1);
        let h = len / n as f64;
        for _ in 0..n {
            match seg {
                Seg::S => {
                    q[0] += h * q[2].cos();
                    q[1] += h * q[2].sin();
                }
                Seg::L | Seg::R => {
                    let s = if *seg == Seg::L { 1.0 } else { -1.0 };
                    let dth = s * h / rho;
                    // exact arc
                    q[0] += rho * s * ((q[2] + dth).sin() - q[2].sin());
                    q[1] += -rho * s * ((q[2] + dth).cos() - q[2].cos());
                    q[2] += dth;
                }
            }
            pts.push(q);
        }
    }
    pts
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = m2pi(a - b);
    d.min(2.0 * PI - d)
}

/// Shortest verified word, with its length.
pub fn shortest(q0: [f64; 3], q1: [f64; 3], rho: f64) -> Option<(Word, f64)> {
    words(q0, q1, rho)
        .into_iter()
        .filter(|w| {
            let end = *sample(q0, w, rho, 1e-3).last().unwrap();
            (end[0] - q1[0]).hypot(end[1] - q1[1]) < 1e-8 && angle_gap(end[2], q1[2]) < 1e-8
        })
        .map(|w| (w, w.length(rho)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Shortest path from a point with free initial heading to `q1`: coarse
/// scan of the heading followed by a ternary refinement.
pub fn from_point(p0: [f64; 2], q1: [f64; 3], rho: f64) -> Option<(f64, Word, f64)> {
    let f = |phi: f64| shortest([p0[0], p0[1], phi], q1, rho).map_or(f64::INFINITY, |(_, l)| l);
    let n = 1440;
    let (mut best, mut bl) = (0.0, f64::INFINITY);
    for k in 0..n {
        let phi = 2.0 * PI * k as f64 / n as f64;
        let l = f(phi);
        if l < bl {
            best = phi;
            bl = l;
        }
    }
    let (mut lo, mut hi) = (best - 2.0 * PI / n as f64, best + 2.0 * PI / n as f64);
    for _ in 0..60 {
        let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let phi = 0.5 * (lo + hi);
    let (w, l) = shortest([p0[0], p0[1], phi], q1, rho)?;
    if l <= bl {
        Some((phi, w, l))
    } else {
        shortest([p0[0], p0[1], best], q1, rho).map(|(w, l)| (best, w, l))
    }
}
