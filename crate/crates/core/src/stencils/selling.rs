//! Selling's decomposition of 2×2 and 3×3 positive definite matrices into
//! non-negative combinations of rank-one lattice products `e eᵀ`.
//!
//! A superbase `(b_0, .., b_d)` of `Z^d` sums to zero. It is obtuse w.r.t. `D`
//! when `⟨b_i, D b_j⟩ ≤ 0` for all `i ≠ j`; then
//! `D = Σ_{i<j} -⟨b_i, D b_j⟩ · e_ij e_ijᵀ` where `e_ij` is orthogonal to the
//! remaining superbase vectors.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;

/// One term `weight · offset offsetᵀ`; `weight = -⟨b_i, D b_j⟩` with
/// `pair = (i, j)` indexing the superbase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellingTerm<const N: usize> {
    pub offset: [i32; N],
    pub weight: f64,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<const N: usize> {
    pub superbase: Vec<[i32; N]>,
    /// Terms with strictly positive weight.
    pub terms: Vec<SellingTerm<N>>,
}

impl<const N: usize> Decomposition<N> {
    pub fn reconstruct(&self) -> [[f64; N]; N] {
        let mut m = [[0.0; N]; N];
        for t in &self.terms {
            for a in 0..N {
                for b in 0..N {
                    m[a][b] += t.weight * t.offset[a] as f64 * t.offset[b] as f64;
                }
            }
        }
        m
    }
}

fn quad<const N: usize>(d: &[[f64; N]; N], u: &[i32; N], v: &[i32; N]) -> f64 {
    let mut s = 0.0;
    for a in 0..N {
        for b in 0..N {
            s += u[a] as f64 * d[a][b] * v[b] as f64;
        }
    }
    s
}

fn neg<const N: usize>(v: [i32; N]) -> [i32; N] {
    v.map(|x| -x)
}

fn add<const N: usize>(u: [i32; N], v: [i32; N]) -> [i32; N] {
    let mut r = u;
    for a in 0..N {
        r[a] += v[a];
    }
    r
}

/// Sign normalisation: first non-zero entry positive.
pub fn canonical<const N: usize>(v: [i32; N]) -> [i32; N] {
    match v.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => neg(v),
        _ => v,
    }
}

fn check_spd2(d: &[[f64; 2]; 2]) -> Result<()> {
    let sym = (d[0][1] - d[1][0]).abs() <= 1e-12 * (d[0][0].abs() + d[1][1].abs());
    let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    let finite = d.iter().flatten().all(|x| x.is_finite());
    if !finite || !sym || !(d[0][0] > 0.0) || !(det > 1e-14 * d[0][0] * d[1][1]) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

fn check_spd3(d: &[[f64; 3]; 3]) -> Result<()> {
    let scale: f64 = (0..3).map(|a| d[a][a].abs()).sum();
    let finite = d.iter().flatten().all(|x| x.is_finite());
    let sym = (0..3).all(|a| (0..3).all(|b| (d[a][b] - d[b][a]).abs() <= 1e-12 * scale));
    if !finite || !sym {
        return Err(Error::NotPositiveDefinite);
    }
    // Sylvester's criterion on leading minors.
    let m1 = d[0][0];
    let m2 = d[0][0] * d[1][1] - d[0][1] * d[1][0];
    let m3 = d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1])
        - d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0])
        + d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]);
    let tiny = 1e-14;
    if !(m1 > 0.0) || !(m2 > tiny * scale * scale) || !(m3 > tiny * scale * scale * scale) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(())
}

/// Runs Selling's reduction from the canonical superbase until obtuse.
fn reduce<const N: usize>(d: &[[f64; N]; N]) -> Result<Vec<[i32; N]>> {
    let mut b: Vec<[i32; N]> = (0..N)
        .map(|a| {
            let mut e = [0; N];
            e[a] = 1;
            e
        })
        .collect();
    b.push([-1; N]);
    let scale: f64 = (0..N).map(|a| d[a][a]).sum();
    let tol = 1e-14 * scale;
    for _ in 0..MAX_ITERATIONS {
        let mut found = None;
        'search: for i in 0..=N {
            for j in (i + 1)..=N {
                if quad(d, &b[i], &b[j]) > tol {
                    found = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((i, j)) = found else { return Ok(b) };
        let bi = b[i];
        let bj = b[j];
        b[i] = neg(bi);
        if N == 2 {
            let k = 3 - i - j;
            b[k] = add(bi, neg(bj));
        } else {
            for k in 0..=N {
                if k != i && k != j {
                    b[k] = add(b[k], bi);
                }
            }
        }
    }
    Err(Error::SellingNoConvergence(MAX_ITERATIONS))
}

pub fn selling_decompose_2d(d: &[[f64; 2]; 2]) -> Result<Decomposition<2>> {
    check_spd2(d)?;
    let sb = reduce(d)?;
    let mut terms = Vec::with_capacity(3);
    for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        let w = -quad(d, &sb[i], &sb[j]);
        if w > 0.0 {
            let e = sb[k];
            terms.push(SellingTerm { offset: canonical([-e[1], e[0]]), weight: w, pair: (i, j) });
        }
    }
    Ok(Decomposition { superbase: sb, terms })
}

pub fn selling_decompose_3d(d: &[[f64; 3]; 3]) -> Result<Decomposition<3>> {
    check_spd3(d)?;
    let sb = reduce(d)?;
    let mut terms = Vec::with_capacity(6);
    for i in 0..4 {
        for j in (i + 1)..4 {
            let w = -quad(d, &sb[i], &sb[j]);
            if w > 0.0 {
                let mut rest = (0..4).filter(|&a| a != i && a != j);
                let k = sb[rest.next().unwrap()];
                let l = sb[rest.next().unwrap()];
                let e = [
                    k[1] * l[2] - k[2] * l[1],
                    k[2] * l[0] - k[0] * l[2],
                    k[0] * l[1] - k[1] * l[0],
                ];
                terms.push(SellingTerm { offset: canonical(e), weight: w, pair: (i, j) });
            }
        }
    }
    Ok(Decomposition { superbase: sb, terms })
}
