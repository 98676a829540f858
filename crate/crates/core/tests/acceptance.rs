//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero on any
//! failure only when `ACCEPTANCE_STRICT` is set, so that `cargo test` still
//! runs the remaining suites; the FAIL lines are the verdict.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use eikgame::adjoint::{forward_diff, forward_diff_edges, reverse_diff, TargetFunctional};
use eikgame::cli::{cmd_gradient, cmd_optimize, cmd_solve, Run};
use eikgame::config::{default_obstacles, default_scene, RunConfig};
use eikgame::eikonal::{fast_march, point_seeds, SolveResult};
use eikgame::games::{
    evaluate, CameraSet, Density, GameSpec, PaintField, RadarSet, SensorConfig, PAINT_BOUNDS, RADAR_REGION,
};
use eikgame::geodesic::{discrete_curvature, hausdorff};
use eikgame::grid::{build_grid, Grid, GridSpec};
use eikgame::optimize::{maximize, AscentConfig};
use eikgame::stencils::{Model, StencilField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut v: Vec<Duration>) -> f64 {
    v.sort();
    v[v.len() / 2].as_secs_f64()
}

fn standard(model: Model) -> GridSpec {
    let s = GridSpec::rectangle([0.0, 0.0], [2.0, 1.0], 180, 89);
    if model.is_curvature() {
        s.with_angles(60)
    } else {
        s
    }
}

fn seed_point(g: &Grid, seeds: &[eikgame::eikonal::Seed]) -> [f64; 2] {
    let idx = g.unflat(seeds[0].node);
    g.cell_center(idx[0], idx[1])
}

/// Largest deviation of `U` from `exact(dx, dy)` over reached nodes.
fn max_error(g: &Grid, r: &SolveResult, from: [f64; 2], exact: impl Fn(f64, f64) -> f64) -> f64 {
    (0..g.len())
        .filter(|&x| r.values[x].is_finite())
        .map(|x| {
            let i = g.unflat(x);
            let p = g.cell_center(i[0], i[1]);
            (r.values[x] - exact(p[0] - from[0], p[1] - from[1])).abs()
        })
        .fold(0.0, f64::max)
}

fn euclidean_solve(nx: usize, ny: usize) -> (Grid, SolveResult, Duration) {
    let g = build_grid(&GridSpec::rectangle([0.0, 0.0], [2.0, 1.0], nx, ny)).unwrap();
    let t = Instant::now();
    let f = StencilField::scalar(&g, Model::Isotropic, 1.0, 0.1, &vec![1.0; g.len()]).unwrap();
    let r = fast_march(&g, &f, &point_seeds(&g, [0.2, 0.5]).unwrap()).unwrap();
    (g, r, t.elapsed())
}

fn c1_eikonal() -> Outcome {
    let mut times = Vec::new();
    let (g, r, _) = euclidean_solve(180, 89);
    for _ in 0..3 {
        times.push(euclidean_solve(180, 89).2);
    }
    let e1 = max_error(&g, &r, [0.2, 0.5], f64::hypot);
    let (g2, r2, _) = euclidean_solve(360, 178);
    let e2 = max_error(&g2, &r2, [0.2, 0.5], f64::hypot);
    let t = median(times);
    check(
        e1 <= 5.0 * g.h() && e2 < e1 && t <= 0.5,
        format!("err {e1:.4e} <= 5h={:.4e}, doubled {e2:.4e} < err, runtime {t:.3}s <= 0.5s", 5.0 * g.h()),
    )
}

fn c2_riemannian() -> Outcome {
    let g = build_grid(&standard(Model::Isotropic)).unwrap();
    // M = diag(1, 4), dual D = M⁻¹
    let d = [[1.0, 0.0], [0.0, 0.25]];
    let f = StencilField::riemannian(&g, &vec![d; g.len()]).unwrap();
    let r = fast_march(&g, &f, &point_seeds(&g, [0.2, 0.5]).unwrap()).unwrap();
    let e = max_error(&g, &r, [0.2, 0.5], |dx, dy| (dx * dx + 4.0 * dy * dy).sqrt());
    check(e <= 10.0 * g.h(), format!("err {e:.4e} <= 10h={:.4e}", 10.0 * g.h()))
}

fn c3_dubins() -> Outcome {
    let rho = 0.3;
    let g = build_grid(&standard(Model::Dubins)).unwrap();
    let t = Instant::now();
    let f = StencilField::scalar(&g, Model::Dubins, rho, GameSpec::new(Model::Dubins).epsilon, &vec![1.0; g.len()])
        .unwrap();
    let seeds = point_seeds(&g, [0.2, 0.5]).unwrap();
    let r = fast_march(&g, &f, &seeds).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let s = seed_point(&g, &seeds);
    let (lo, hi) = (g.cell_center(0, 0), g.cell_center(g.dims()[0] - 1, g.dims()[1] - 1));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    let mut tries = 0;
    while samples < 20 && tries < 10_000 {
        tries += 1;
        let (i, j, k) = (rng.gen_range(0..g.dims()[0]), rng.gen_range(0..g.dims()[1]), rng.gen_range(0..g.ntheta()));
        let p = g.cell_center(i, j);
        if (p[0] - s[0]).hypot(p[1] - s[1]) < 0.25 {
            continue;
        }
        let q = [p[0], p[1], g.theta_of(k)];
        let Some((phi, w, len)) = common::from_point(s, q, rho) else { continue };
        // the solver lives in the rectangle; keep configurations whose
        // unconstrained optimum does too
        let inside = common::sample([s[0], s[1], phi], &w, rho, 0.01)
            .iter()
            .all(|p| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]);
        if !inside {
            continue;
        }
        let u = r.values[g.flat([i, j, k])];
        worst = worst.max((u - len).abs() / len);
        samples += 1;
    }
    check(
        samples == 20 && worst <= 0.1 && elapsed <= 10.0,
        format!("{samples} configurations, max relative err {worst:.4} <= 0.1, runtime {elapsed:.2}s <= 10s"),
    )
}

fn fd_max_error(g: &Grid, spec: &GameSpec, sensors: &SensorConfig, n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let r = evaluate(g, spec, sensors).unwrap();
    let x = sensors.params(g).unwrap();
    let (lo, hi) = sensors.bounds(g);
    let scale = r.gradient.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let support: Vec<usize> = (0..x.len()).filter(|&i| r.gradient[i].abs() > 1e-3 * scale).collect();
    let picked: Vec<usize> = if support.len() <= n {
        support
    } else {
        rand::seq::index::sample(rng, support.len(), n).into_iter().map(|k| support[k]).collect()
    };
    let mut worst: f64 = 0.0;
    for i in picked {
        let eta = 1e-5 * x[i].abs().max(1.0);
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] = (x[i] + eta).min(hi[i]);
        xm[i] = (x[i] - eta).max(lo[i]);
        let f = |v: &[f64]| evaluate(g, spec, &sensors.with_params(v)).unwrap().objective();
        let fd = (f(&xp) - f(&xm)) / (xp[i] - xm[i]);
        worst = worst.max((fd - r.gradient[i]).abs() / scale);
    }
    worst
}

fn small(model: Model, obstacles: bool) -> Grid {
    let s = GridSpec::rectangle([0.0, 0.0], [2.0, 1.0], 60, 30);
    let s = if model.is_curvature() { s.with_angles(24) } else { s };
    build_grid(&if obstacles { s.with_obstacles(default_obstacles()) } else { s }).unwrap()
}

fn random_density(g: &Grid, rng: &mut ChaCha8Rng) -> SensorConfig {
    let xi = (0..g.spatial_len()).map(|_| rng.gen_range(0.2..0.9)).collect();
    SensorConfig::Paint(PaintField { density: Density::Map(xi), bounds: PAINT_BOUNDS })
}

fn duality(model: Model, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = small(model, true);
    let riemannian = model == Model::Riemannian;
    let f = if riemannian {
        let duals: Vec<[[f64; 2]; 2]> = (0..g.len())
            .map(|_| {
                let (a, b, c) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-0.4..0.4));
                [[a, c], [c, b]]
            })
            .collect();
        StencilField::riemannian(&g, &duals).unwrap()
    } else {
        let costs: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.5..2.0)).collect();
        StencilField::scalar(&g, model, 0.3, 0.1, &costs).unwrap()
    };
    let r = fast_march(&g, &f, &point_seeds(&g, [0.2, 0.5]).unwrap()).unwrap();
    let target = TargetFunctional {
        terms: (0..5)
            .map(|_| (r.order[rng.gen_range(0..r.order.len())] as usize, rng.gen_range(-1.0..1.0)))
            .collect(),
    };
    let s = reverse_diff(&r, &target).unwrap();
    let (lhs, rhs) = if riemannian {
        let dlnc: Vec<f64> = (0..r.edge_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let du = forward_diff_edges(&r, &dlnc).unwrap();
        let mut rhs = 0.0;
        for &x in &r.order {
            let x = x as usize;
            let span = r.edge_span(x);
            for (e, (t, d)) in r.edges(x).iter().zip(s.per_edge[span.clone()].iter().zip(&dlnc[span])) {
                rhs += t * 2.0 * e.weight * d;
            }
        }
        (target.terms.iter().map(|&(n, c)| c * du[n]).sum::<f64>(), rhs)
    } else {
        let dlnc: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let du = forward_diff(&r, &dlnc).unwrap();
        (
            target.terms.iter().map(|&(n, c)| c * du[n]).sum::<f64>(),
            s.per_node.iter().zip(&dlnc).map(|(a, b)| a * b).sum::<f64>(),
        )
    };
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

fn free_point(g: &Grid, rng: &mut ChaCha8Rng, lo: [f64; 2], hi: [f64; 2]) -> [f64; 2] {
    loop {
        let p = [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])];
        if let Some((i, j)) = g.cell_of(p) {
            if !g.is_cell_masked(i, j) {
                return p;
            }
        }
    }
}

fn c4_adjoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let planar = small(Model::Isotropic, true);
    let cams = SensorConfig::Camera(CameraSet {
        positions: (0..2).map(|_| free_point(&planar, &mut rng, [0.0, 0.0], [2.0, 1.0])).collect(),
        background: 0.05,
    });
    let radars = SensorConfig::Radar(RadarSet {
        positions: (0..3).map(|_| free_point(&planar, &mut rng, RADAR_REGION.lower, RADAR_REGION.upper)).collect(),
        delta: 0.2,
        region: RADAR_REGION,
    });
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    let curvature = [Model::ReedsSheppForward, Model::Dubins];
    let mut cases: Vec<(&str, Model, SensorConfig)> = Vec::new();
    for m in [Model::Isotropic].into_iter().chain(curvature) {
        cases.push(("paint", m, random_density(&small(m, true), &mut rng)));
        cases.push(("camera", m, cams.clone()));
    }
    for m in [Model::Riemannian].into_iter().chain(curvature) {
        cases.push(("radar", m, radars.clone()));
    }
    for (name, model, sensors) in &cases {
        let g = small(*model, *name != "radar");
        let e = fd_max_error(&g, &GameSpec::new(*model), sensors, 10, &mut rng);
        worst = worst.max(e);
        lines.push(format!("{name}/{model:?} {e:.1e}"));
    }
    let dual = [Model::Isotropic, Model::Riemannian, Model::ReedsSheppForward, Model::Dubins]
        .into_iter()
        .enumerate()
        .map(|(k, m)| duality(m, 40 + k as u64))
        .fold(0.0, f64::max);
    check(
        worst <= 1e-4 && dual <= 1e-10,
        format!("fd max rel err {worst:.2e} <= 1e-4 [{}], duality {dual:.2e} <= 1e-10", lines.join(", ")),
    )
}

fn gradient_time(nx: usize) -> f64 {
    let g = build_grid(&GridSpec::rectangle([0.0, 0.0], [2.0, 1.0], nx, nx / 2)).unwrap();
    let spec = GameSpec::new(Model::Isotropic);
    let s = SensorConfig::Paint(PaintField::uniform(0.5));
    let times = (0..5)
        .map(|_| {
            let t = Instant::now();
            evaluate(&g, &spec, &s).unwrap();
            t.elapsed()
        })
        .collect();
    median(times)
}

fn c5_complexity() -> Outcome {
    let g = build_grid(&standard(Model::Dubins)).unwrap();
    let f = StencilField::scalar(&g, Model::Dubins, 0.3, 0.1, &vec![1.0; g.len()]).unwrap();
    let seeds = point_seeds(&g, [0.2, 0.5]).unwrap();
    let (mut ts, mut tr) = (Vec::new(), Vec::new());
    let kp = g.snap([1.8, 0.5], Some(0.0)).unwrap();
    for _ in 0..3 {
        let t = Instant::now();
        let r = fast_march(&g, &f, &seeds).unwrap();
        ts.push(t.elapsed());
        let t = Instant::now();
        reverse_diff(&r, &TargetFunctional::single(g.flat(kp))).unwrap();
        tr.push(t.elapsed());
    }
    let (solve, rev) = (median(ts), median(tr));
    // 360×180 → 510×255 doubles the node count
    let (t1, t2) = (gradient_time(360), gradient_time(510));
    let n1 = 360.0 * 180.0;
    let n2 = 510.0 * 255.0;
    let ratio = t2 / t1;
    check(
        rev <= solve && ratio <= 2.6,
        format!(
            "reverse {rev:.3}s <= solve {solve:.3}s; gradient time x{ratio:.2} <= 2.6 for N x{:.2} ({t1:.3}s -> {t2:.3}s)",
            n2 / n1
        ),
    )
}

fn c6_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut notes = Vec::new();
    let mut ok = true;

    // concavity: 𝔠(b) ≤ 𝔠(a) + ⟨∇𝔠(a), b − a⟩
    let g = build_grid(&standard(Model::Isotropic).with_obstacles(default_obstacles())).unwrap();
    let spec = GameSpec::new(Model::Isotropic);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..50 {
        let a = random_density(&g, &mut rng);
        let xa = a.params(&g).unwrap();
        // alternate far pairs and nearby perturbations
        let xb: Vec<f64> = if k % 2 == 0 {
            random_density(&g, &mut rng).params(&g).unwrap()
        } else {
            xa.iter().map(|v| (v + rng.gen_range(-0.02..0.02)).clamp(PAINT_BOUNDS[0], PAINT_BOUNDS[1])).collect()
        };
        let b = a.with_params(&xb);
        let ra = evaluate(&g, &spec, &a).unwrap();
        let vb = evaluate(&g, &spec, &b).unwrap().objective();
        let lin: f64 = ra.gradient.iter().zip(xa.iter().zip(&xb)).map(|(s, (p, q))| s * (q - p)).sum();
        worst = worst.max(vb - (ra.objective() + lin));
    }
    ok &= worst <= 1e-8;
    notes.push(format!("concavity excess {worst:.2e} <= 1e-8"));

    // forward and return paths of curvature-independent models
    let mut haus: f64 = 0.0;
    for (scene, model) in [("free", Model::Isotropic), ("camera", Model::Isotropic), ("radar", Model::Riemannian)] {
        let cfg = default_scene(scene, model).unwrap();
        let g = cfg.build_grid().unwrap();
        let r = evaluate(&g, &cfg.game, &cfg.sensors).unwrap();
        let (fw, rt) = r.solves.paths(&g).unwrap();
        haus = haus.max(hausdorff(&fw.planar(), &rt.planar()) / g.h());
    }
    ok &= haus <= 2.0;
    notes.push(format!("forward/return hausdorff {haus:.2}h <= 2h"));

    // curvature of traced Dubins paths
    let cfg = default_scene("free", Model::Dubins).unwrap();
    let g = cfg.build_grid().unwrap();
    let r = evaluate(&g, &cfg.game, &cfg.sensors).unwrap();
    let (fw, rt) = r.solves.paths(&g).unwrap();
    let rho = cfg.game.rho;
    let bound = (1.0 + 10.0 * g.h() / rho) / rho;
    let kmax = [fw, rt]
        .iter()
        .flat_map(|p| discrete_curvature(&p.planar(), 2.0 * g.h()).unwrap())
        .fold(0.0, f64::max);
    ok &= kmax <= bound;
    notes.push(format!("dubins curvature {kmax:.3} <= {bound:.3}"));

    // adding a sensor never lowers the value
    let gc = build_grid(&standard(Model::Isotropic).with_obstacles(default_obstacles())).unwrap();
    let gr = build_grid(&standard(Model::Isotropic)).unwrap();
    let mut drop: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(0..3);
        let mut pos: Vec<[f64; 2]> = (0..n).map(|_| free_point(&gc, &mut rng, [0.0, 0.0], [2.0, 1.0])).collect();
        let before = evaluate(&gc, &spec, &SensorConfig::Camera(CameraSet { positions: pos.clone(), background: 0.05 }))
            .unwrap()
            .value;
        pos.push(free_point(&gc, &mut rng, [0.0, 0.0], [2.0, 1.0]));
        let after =
            evaluate(&gc, &spec, &SensorConfig::Camera(CameraSet { positions: pos, background: 0.05 })).unwrap().value;
        drop = drop.max((before - after) / before);
    }
    let rspec = GameSpec::new(Model::Riemannian);
    for _ in 0..20 {
        let n = rng.gen_range(1..4);
        let (lo, hi) = RADAR_REGION_BOUNDS;
        let mut pos: Vec<[f64; 2]> = (0..n).map(|_| free_point(&gr, &mut rng, lo, hi)).collect();
        let delta = rng.gen_range(0.1..1.0);
        let radar = |positions| SensorConfig::Radar(RadarSet { positions, delta, region: RADAR_REGION });
        let before = evaluate(&gr, &rspec, &radar(pos.clone())).unwrap().value;
        pos.push(free_point(&gr, &mut rng, lo, hi));
        let after = evaluate(&gr, &rspec, &radar(pos)).unwrap().value;
        drop = drop.max((before - after) / before);
    }
    ok &= drop <= 0.0;
    notes.push(format!("max relative decrease when adding a sensor {drop:.2e} <= 0"));
    check(ok, notes.join("; "))
}

const RADAR_REGION_BOUNDS: ([f64; 2], [f64; 2]) = (RADAR_REGION.lower, RADAR_REGION.upper);

fn c7_optimization() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let cfg = default_scene("paint", Model::Isotropic).unwrap();
    let g = cfg.build_grid().unwrap();
    let x0 = cfg.sensors.params(&g).unwrap();
    let (lo, hi) = cfg.sensors.bounds(&g);
    let mut a = AscentConfig::new(lo, hi);
    a.max_iterations = 100;
    let res = maximize(
        |x| {
            let r = evaluate(&g, &cfg.game, &cfg.sensors.with_params(x))?;
            Ok((r.objective(), r.gradient))
        },
        &x0,
        &a,
    )
    .unwrap();
    let h = &res.history;
    let monotone = h.windows(2).all(|w| w[1].value >= w[0].value);
    let reduction = h[0].gradient_norm / h.last().unwrap().gradient_norm;
    ok &= monotone && reduction >= 1e3;
    notes.push(format!(
        "paint: {} iterations ({:?}), monotone {monotone}, projected gradient reduced x{reduction:.1} (need >= 1e3)",
        h.len() - 1,
        res.stop
    ));

    let cfg = default_scene("radar", Model::Riemannian).unwrap();
    let g = cfg.build_grid().unwrap();
    let x0 = cfg.sensors.params(&g).unwrap();
    let (lo, hi) = cfg.sensors.bounds(&g);
    let mut a = AscentConfig::new(lo.clone(), hi.clone());
    a.max_iterations = 100;
    let res = maximize(
        |x| {
            let r = evaluate(&g, &cfg.game, &cfg.sensors.with_params(x))?;
            Ok((r.objective(), r.gradient))
        },
        &x0,
        &a,
    )
    .unwrap();
    let inside = res.x.iter().enumerate().all(|(i, v)| *v >= lo[i] && *v <= hi[i]);
    let (v0, v1) = (res.history[0].value, res.value);
    ok &= v1 > v0 && inside;
    notes.push(format!("radar: value {v0:.4} -> {v1:.4}, in box {inside}"));
    check(ok, notes.join("; "))
}

fn run_all(out: &Path, config: &Path) {
    let mut cfg = RunConfig::load(config).unwrap();
    cfg.optimize.max_iterations = 5;
    cfg.plot = true;
    let mut run = Run::new(cfg, out);
    run.check_gradient = true;
    cmd_solve(&run).unwrap();
    cmd_gradient(&run).unwrap();
    cmd_optimize(&run).unwrap();
}

fn listing(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().is_some_and(|n| n != "timings.json"))
        .collect();
    v.sort();
    v
}

fn c8_determinism() -> Outcome {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut diffs = Vec::new();
    for name in ["paint_isotropic", "camera_isotropic", "radar_riemannian_anisotropic"] {
        let path = configs.join(format!("{name}.json"));
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        run_all(&a, &path);
        run_all(&b, &path);
        let (la, lb) = (listing(&a), listing(&b));
        if la.iter().map(|p| p.file_name()).ne(lb.iter().map(|p| p.file_name())) {
            diffs.push(format!("{name}: file sets differ"));
        }
        for (p, q) in la.iter().zip(&lb) {
            compared += 1;
            if std::fs::read(p).unwrap() != std::fs::read(q).unwrap() {
                diffs.push(p.display().to_string());
            }
        }
    }
    check(
        diffs.is_empty() && compared > 0,
        format!("{compared} files compared, {} differ {diffs:?}", diffs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("eikonal accuracy", c1_eikonal),
        ("riemannian accuracy", c2_riemannian),
        ("dubins accuracy", c3_dubins),
        ("adjoint correctness", c4_adjoint),
        ("adjoint complexity", c5_complexity),
        ("game properties", c6_properties),
        ("optimization", c7_optimization),
        ("determinism", c8_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != n + 1) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {} {name}: {d} ({secs:.1}s)", n + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d} ({secs:.1}s)", n + 1)
            }
        }
    }
    println!("acceptance: {} failed", failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
