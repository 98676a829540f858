use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eikgame::geodesic::discrete_curvature;
use eikgame::io::{read_map, read_path_csv};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eikgame"))
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "status {:?}\n{}", o.status, String::from_utf8_lossy(&o.stderr));
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn grid(nx: usize, ntheta: Option<usize>, obstacles: bool) -> Value {
    let mut g = json!({ "lower": [0.0, 0.0], "upper": [2.0, 1.0], "nx": nx, "ny": nx / 2 });
    if let Some(n) = ntheta {
        g["ntheta"] = n.into();
    }
    if obstacles {
        g["obstacles"] = json!([
            { "box": { "lower": [0.55, 0.0], "upper": [0.65, 0.4] } },
            { "box": { "lower": [0.55, 0.6], "upper": [0.65, 1.0] } },
            { "disc": { "center": [1.1, 0.45], "radius": 0.15 } }
        ]);
    }
    g
}

fn config(grid: Value, model: &str, sensors: Value) -> Value {
    json!({ "schema": 1, "grid": grid, "game": { "model": model }, "sensors": sensors, "seed": 7 })
}

fn cameras() -> Value {
    json!({ "kind": "camera", "positions": [[0.93, 0.83], [1.47, 0.16]] })
}

fn radars() -> Value {
    json!({ "kind": "radar", "positions": [[0.61, 0.31], [1.02, 0.69], [1.43, 0.28]], "delta": 0.2 })
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ \"schema\": 1, \"grid\": [").unwrap();
    let o = run(&["solve"], &p, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
    let o = run(&["solve"], &dir.path().join("missing.json"), &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreachable_keypoint_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = grid(40, None, false);
    g["obstacles"] = json!([{ "box": { "lower": [1.0, 0.0], "upper": [1.2, 1.0] } }]);
    let p = write_config(dir.path(), "wall", &config(g, "isotropic", json!({ "kind": "free" })));
    let o = run(&["solve"], &p, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn free_isotropic_paths_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "free", &config(grid(60, None, true), "isotropic", json!({ "kind": "free" })));
    let out = dir.path().join("out");
    assert_ok(&run(&["solve", "--plot"], &p, &out));
    let fw = std::fs::read_to_string(out.join("path_forward.csv")).unwrap();
    let rt = std::fs::read_to_string(out.join("path_return.csv")).unwrap();
    assert_eq!(fw, rt);
    assert!(fw.starts_with("x,y,cumulative_cost\n"));
    let meta = read(&out.join("run.json"));
    assert_eq!(meta["dims"], json!([60, 30, 1]));
    assert!(out.join("solve.svg").exists());
    let (h, u) = read_map(&out.join("value_forward.bin")).unwrap();
    assert_eq!(h.dims.iter().product::<usize>(), u.len());
}

#[test]
fn paint_gradient_map_matches_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "paint",
        &config(grid(60, None, true), "isotropic", json!({ "kind": "paint", "density": 0.5 })),
    );
    let out = dir.path().join("out");
    assert_ok(&run(&["gradient", "--check-gradient"], &p, &out));
    let (h, g) = read_map(&out.join("gradient.bin")).unwrap();
    assert_eq!(h.dims, vec![60, 30]);
    assert_eq!(g.len(), 1800);
    assert_eq!(read(&out.join("gradient_check.json"))["passed"], json!(true));
}

#[test]
fn camera_gradient_has_two_entries_per_camera() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "cam", &config(grid(60, None, true), "isotropic", cameras()));
    let out = dir.path().join("out");
    assert_ok(&run(&["gradient", "--check-gradient", "--plot"], &p, &out));
    let doc = read(&out.join("gradient.json"));
    assert_eq!(doc["gradient"].as_array().unwrap().len(), 4);
    assert_eq!(doc["parameter_count"], json!(4));
    assert!(out.join("gradient.svg").exists());
}

#[test]
fn radar_gradient_check_on_a_curvature_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "radar", &config(grid(40, Some(16), false), "dubins", radars()));
    let out = dir.path().join("out");
    assert_ok(&run(&["gradient", "--check-gradient"], &p, &out));
    let check = read(&out.join("gradient_check.json"));
    assert_eq!(check["entries"].as_array().unwrap().len(), 6);
}

#[test]
fn stencil_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let iso = write_config(dir.path(), "iso", &config(grid(40, None, false), "isotropic", json!({ "kind": "free" })));
    assert_ok(&run(&["stencil-dump", "--node", "10,10"], &iso, &out));
    let d = read(&out.join("stencil.json"));
    assert_eq!(d["controls"].as_array().unwrap().len(), 1);
    assert_eq!(d["controls"][0].as_array().unwrap().len(), 4);

    let dub = write_config(dir.path(), "dub", &config(grid(40, Some(16), false), "dubins", json!({ "kind": "free" })));
    assert_ok(&run(&["stencil-dump", "--node", "10,10,3"], &dub, &out));
    let d = read(&out.join("stencil.json"));
    assert_eq!(d["controls"].as_array().unwrap().len(), 2);
    assert!(out.join("stencil.svg").exists());

    let mut riem = config(grid(40, None, false), "riemannian", json!({ "kind": "free" }));
    riem["metric"] = json!([[2.0, 0.6], [0.6, 1.0]]);
    let riem = write_config(dir.path(), "riem", &riem);
    assert_ok(&run(&["stencil-dump"], &riem, &out));
    let d = read(&out.join("stencil.json"));
    assert!(d["reconstruction_error"].as_f64().unwrap() < 1e-9);

    let o = run(&["stencil-dump", "--node", "99,0"], &iso, &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn optimize_paint_and_radar() {
    let dir = tempfile::tempdir().unwrap();
    let mut paint = config(grid(40, None, true), "isotropic", json!({ "kind": "paint", "density": 0.5 }));
    paint["optimize"] = json!({ "max_iterations": 15 });
    let p = write_config(dir.path(), "paint", &paint);
    let out = dir.path().join("paint");
    assert_ok(&run(&["optimize"], &p, &out));
    let log = std::fs::read_to_string(out.join("log.csv")).unwrap();
    let values: Vec<f64> = log.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(values.len() > 1 && values.windows(2).all(|w| w[1] >= w[0]));
    let (_, xi) = read_map(&out.join("final_density.bin")).unwrap();
    assert!(xi.iter().all(|&v| (0.1..=1.0).contains(&v)));

    let mut radar = config(grid(60, None, false), "riemannian", radars());
    radar["optimize"] = json!({ "max_iterations": 20 });
    let p = write_config(dir.path(), "radar", &radar);
    let out = dir.path().join("radar");
    assert_ok(&run(&["optimize", "--plot"], &p, &out));
    let s = read(&out.join("summary.json"));
    assert!(s["final_value"].as_f64().unwrap() > s["initial"].as_f64().unwrap());
    let fin = read(&out.join("final_sensors.json"));
    for q in fin["positions"].as_array().unwrap() {
        let (x, y) = (q[0].as_f64().unwrap(), q[1].as_f64().unwrap());
        assert!((0.4..=1.6).contains(&x) && (0.1..=0.9).contains(&y), "{x} {y}");
    }
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "cam", &config(grid(40, Some(16), true), "reeds_shepp_forward", cameras()));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_ok(&run(&["solve", "--plot"], &p, out));
        assert_ok(&run(&["gradient", "--check-gradient", "--seed", "3"], &p, out));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for n in names.iter().filter(|n| *n != "timings.json") {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n:?}");
    }
}

#[test]
fn dubins_path_respects_the_turning_radius() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(dir.path(), "dub", &config(grid(90, Some(36), false), "dubins", json!({ "kind": "free" })));
    let out = dir.path().join("out");
    assert_ok(&run(&["solve"], &p, &out));
    let h = 2.0 / 90.0;
    let bound = (1.0 + 10.0 * h / 0.3) / 0.3;
    for f in ["path_forward.csv", "path_return.csv"] {
        let path = read_path_csv(&out.join(f)).unwrap();
        let k = discrete_curvature(&path.planar(), 2.0 * h).unwrap();
        let kmax = k.iter().copied().fold(0.0, f64::max);
        assert!(kmax <= bound, "{f}: {kmax} > {bound}");
    }
}
