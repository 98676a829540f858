//! Command-line front end: argument parsing and the four commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::games::{evaluate, radar_metric, ObjectiveResult, SensorConfig};
use crate::grid::Grid;
use crate::io::{write_cell_map, write_json, write_log_csv, write_node_map, write_path_csv};
use crate::optimize::{maximize, AscentConfig, StopReason};
use crate::plot::{stencil_svg, Figure, Glyph};
use crate::stencils::{stencil_dump, Model, ModelParams};

#[derive(Debug, Parser)]
#[command(name = "eikgame", version, about = "Threatening paths and sensor placement games by fast marching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config; default `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write SVG figures.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Compare the gradient against central finite differences.
    #[arg(long, global = true)]
    pub check_gradient: bool,
    /// Random seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value maps and the outbound and return paths.
    Solve,
    /// Game value, gradient and sensitivity map.
    Gradient,
    /// Ascent of the sensor player's objective.
    Optimize,
    /// Stencil of one node.
    StencilDump {
        /// Node index `i,j[,k]`; defaults to the source point.
        #[arg(long, value_delimiter = ',')]
        node: Vec<usize>,
    },
}

/// Options shared by the commands, after merging flags into the config.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
    pub plot: bool,
    pub check_gradient: bool,
}

impl Run {
    pub fn from_cli(cli: &Cli) -> Result<Run> {
        let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut config = RunConfig::load(path)?;
        if let Some(s) = cli.seed {
            config.seed = s;
        }
        let out = cli.out.clone().or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        Ok(Run { plot: cli.plot || config.plot, config, out, check_gradient: cli.check_gradient })
    }

    pub fn new(config: RunConfig, out: &Path) -> Run {
        Run { plot: config.plot, config, out: out.to_path_buf(), check_gradient: false }
    }
}

/// Parses, runs and reports. Returns the written files.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let run = Run::from_cli(cli)?;
    match &cli.command {
        Command::Solve => cmd_solve(&run),
        Command::Gradient => cmd_gradient(&run),
        Command::Optimize => cmd_optimize(&run),
        Command::StencilDump { node } => cmd_stencil_dump(&run, node),
    }
}

fn prepare(run: &Run) -> Result<Grid> {
    fs::create_dir_all(&run.out)?;
    run.config.build_grid()
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'a str,
    model: Model,
    value: f64,
    net: Option<f64>,
    tau: f64,
    dims: [usize; 3],
    nodes: usize,
    unmasked: usize,
    accepted: usize,
    keypoint_node: [usize; 3],
}

fn summary<'a>(command: &'a str, grid: &Grid, cfg: &RunConfig, r: &ObjectiveResult) -> RunSummary<'a> {
    RunSummary {
        command,
        model: cfg.game.model,
        value: r.value,
        net: r.net,
        tau: r.tau,
        dims: grid.dims(),
        nodes: grid.len(),
        unmasked: grid.unmasked_count(),
        accepted: r.solves.forward.order.len(),
        keypoint_node: r.solves.keypoint,
    }
}

/// Per-cell minimum over headings.
fn cell_min(grid: &Grid, values: &[f64]) -> Vec<f64> {
    values.chunks(grid.ntheta()).map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect()
}

fn sensor_points(s: &SensorConfig) -> Vec<[f64; 2]> {
    match s {
        SensorConfig::Camera(c) => c.positions.clone(),
        SensorConfig::Radar(r) => r.positions.clone(),
        _ => Vec::new(),
    }
}

fn figure<'g>(grid: &'g Grid, cfg: &RunConfig, r: &ObjectiveResult, sensors: &SensorConfig) -> Result<Figure<'g>> {
    let mut fig = Figure::new(grid);
    fig.contours(&cell_min(grid, &r.solves.forward.values), 12);
    let (out, back) = r.solves.paths(grid)?;
    fig.path(&out.planar(), "red").path(&back.planar(), "darkred");
    fig.glyph(cfg.game.seed, Glyph::Source).glyph(cfg.game.keypoint, Glyph::Keypoint);
    for q in sensor_points(sensors) {
        fig.glyph(q, Glyph::Sensor);
    }
    Ok(fig)
}

fn write_paths(run: &Run, grid: &Grid, r: &ObjectiveResult, files: &mut Vec<PathBuf>) -> Result<()> {
    let (out, back) = r.solves.paths(grid)?;
    for (name, p) in [("path_forward.csv", &out), ("path_return.csv", &back)] {
        let f = run.out.join(name);
        write_path_csv(&f, p)?;
        files.push(f);
    }
    Ok(())
}

pub fn cmd_solve(run: &Run) -> Result<Vec<PathBuf>> {
    let grid = prepare(run)?;
    let cfg = &run.config;
    let t = Instant::now();
    let r = evaluate(&grid, &cfg.game, &cfg.sensors)?;
    let elapsed = t.elapsed().as_secs_f64();
    let mut files = vec![write_node_map(&run.out, "value_forward", &grid, &r.solves.forward.values)?];
    if let Some(f) = &r.solves.flipped {
        files.push(write_node_map(&run.out, "value_flipped", &grid, &f.values)?);
    }
    write_paths(run, &grid, &r, &mut files)?;
    let meta = run.out.join("run.json");
    write_json(&meta, &summary("solve", &grid, cfg, &r))?;
    files.push(meta);
    // Wall times vary between runs; they live apart from the reproducible outputs.
    let timings = run.out.join("timings.json");
    write_json(&timings, &serde_json::json!({ "evaluate_seconds": elapsed }))?;
    files.push(timings);
    if run.plot {
        let svg = run.out.join("solve.svg");
        fs::write(&svg, figure(&grid, cfg, &r, &cfg.sensors)?.finish())?;
        files.push(svg);
    }
    Ok(files)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub coordinate: usize,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub tolerance: f64,
    pub scale: f64,
    pub entries: Vec<CheckEntry>,
    pub passed: bool,
}

/// Central finite differences on up to `count` coordinates drawn from the
/// gradient support. Errors are measured against `‖∇‖∞`.
pub fn check_gradient(
    grid: &Grid,
    cfg: &RunConfig,
    r: &ObjectiveResult,
    count: usize,
    tolerance: f64,
) -> Result<GradientCheck> {
    let x = cfg.sensors.params(grid)?;
    let (lo, hi) = cfg.sensors.bounds(grid);
    let g = &r.gradient;
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut support: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() > 1e-3 * scale).collect();
    if support.is_empty() {
        support = (0..g.len()).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let picked: Vec<usize> = {
        let mut s: Vec<usize> = support.choose_multiple(&mut rng, count).copied().collect();
        s.sort_unstable();
        s
    };
    let mut entries = Vec::new();
    for i in picked {
        let eta = 1e-5 * x[i].abs().max(1.0);
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] = (x[i] + eta).min(hi[i]);
        xm[i] = (x[i] - eta).max(lo[i]);
        let f = |v: &[f64]| evaluate(grid, &cfg.game, &cfg.sensors.with_params(v)).map(|r| r.objective());
        let fd = (f(&xp)? - f(&xm)?) / (xp[i] - xm[i]);
        entries.push(CheckEntry { coordinate: i, adjoint: g[i], finite_difference: fd, error: (fd - g[i]).abs() });
    }
    let passed = entries.iter().all(|e| e.error <= tolerance * scale);
    Ok(GradientCheck { tolerance, scale, entries, passed })
}

pub fn cmd_gradient(run: &Run) -> Result<Vec<PathBuf>> {
    let grid = prepare(run)?;
    let cfg = &run.config;
    let r = evaluate(&grid, &cfg.game, &cfg.sensors)?;
    let mut files = Vec::new();
    let doc = run.out.join("gradient.json");
    let vector = !matches!(cfg.sensors, SensorConfig::Paint(_));
    write_json(
        &doc,
        &serde_json::json!({
            "value": r.value,
            "net": r.net,
            "objective": r.objective(),
            "tau": r.tau,
            "parameter_count": r.gradient.len(),
            "gradient": if vector { Some(&r.gradient) } else { None },
        }),
    )?;
    files.push(doc);
    if !vector {
        files.push(write_cell_map(&run.out, "gradient", &grid, &r.gradient)?);
    }
    files.push(write_cell_map(&run.out, "sensitivity", &grid, &r.sensitivity)?);
    if run.plot {
        let mut fig = figure(&grid, cfg, &r, &cfg.sensors)?;
        let pts = sensor_points(&cfg.sensors);
        let norm = r.gradient.iter().map(|v| v * v).sum::<f64>().sqrt();
        if vector && norm > 0.0 {
            for (m, q) in pts.iter().enumerate() {
                let d = [r.gradient[2 * m] / norm, r.gradient[2 * m + 1] / norm];
                fig.arrow(*q, [q[0] + 0.15 * d[0], q[1] + 0.15 * d[1]]);
            }
        }
        let svg = run.out.join("gradient.svg");
        fs::write(&svg, fig.finish())?;
        files.push(svg);
    }
    if run.check_gradient {
        let check = check_gradient(&grid, cfg, &r, 10, 1e-4)?;
        let f = run.out.join("gradient_check.json");
        write_json(&f, &check)?;
        files.push(f);
        if !check.passed {
            let worst = check.entries.iter().map(|e| e.error).fold(0.0, f64::max);
            return Err(Error::GradientCheck(format!("max error {worst:e} against scale {:e}", check.scale)));
        }
    }
    Ok(files)
}

#[derive(Serialize)]
struct OptimizeSummary {
    initial: f64,
    final_value: f64,
    iterations: usize,
    evaluations: usize,
    stop: StopReason,
    final_gradient_norm: f64,
}

pub fn cmd_optimize(run: &Run) -> Result<Vec<PathBuf>> {
    let grid = prepare(run)?;
    let cfg = &run.config;
    let x0 = cfg.sensors.params(&grid)?;
    let (lo, hi) = cfg.sensors.bounds(&grid);
    let mut ascent = AscentConfig::new(lo, hi);
    ascent.max_iterations = cfg.optimize.max_iterations;
    ascent.memory = cfg.optimize.memory;
    ascent.tolerance = cfg.optimize.tolerance;
    let res = maximize(
        |x| {
            let r = evaluate(&grid, &cfg.game, &cfg.sensors.with_params(x))?;
            Ok((r.objective(), r.gradient))
        },
        &x0,
        &ascent,
    )?;
    if res.stop == StopReason::LineSearchFailed && res.history.len() == 1 {
        return Err(Error::LineSearchFailed);
    }
    let mut files = Vec::new();
    let log = run.out.join("log.csv");
    write_log_csv(&log, &res.history)?;
    files.push(log);
    let final_sensors = cfg.sensors.with_params(&res.x);
    let fs_path = run.out.join("final_sensors.json");
    write_json(&fs_path, &final_sensors)?;
    files.push(fs_path);
    let r = evaluate(&grid, &cfg.game, &final_sensors)?;
    write_paths(run, &grid, &r, &mut files)?;
    if matches!(final_sensors, SensorConfig::Paint(_)) {
        files.push(write_cell_map(&run.out, "final_density", &grid, &res.x)?);
    }
    let sum = run.out.join("summary.json");
    write_json(
        &sum,
        &OptimizeSummary {
            initial: res.history[0].value,
            final_value: res.value,
            iterations: res.history.len() - 1,
            evaluations: res.evaluations,
            stop: res.stop,
            final_gradient_norm: res.history.last().map_or(0.0, |h| h.gradient_norm),
        },
    )?;
    files.push(sum);
    if run.plot {
        let mut fig = figure(&grid, cfg, &r, &final_sensors)?;
        for (a, b) in sensor_points(&cfg.sensors).iter().zip(sensor_points(&final_sensors)) {
            fig.arrow(*a, b);
        }
        let svg = run.out.join("optimize.svg");
        fs::write(&svg, fig.finish())?;
        files.push(svg);
    }
    Ok(files)
}

fn inverse(m: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !(det > 0.0 && m[0][0] > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

pub fn cmd_stencil_dump(run: &Run, node: &[usize]) -> Result<Vec<PathBuf>> {
    let grid = prepare(run)?;
    let cfg = &run.config;
    let idx = if node.is_empty() { grid.snap(cfg.game.seed, None)? } else { grid.check_index(node)? };
    let params = match cfg.game.model {
        Model::Isotropic => ModelParams::isotropic(1.0),
        Model::Riemannian => {
            let metric = match &cfg.sensors {
                SensorConfig::Radar(r) => radar_metric(grid.cell_center(idx[0], idx[1]), r, 2.0 * grid.h()).0,
                _ => cfg.metric.unwrap_or([[1.0, 0.0], [0.0, 1.0]]),
            };
            ModelParams::riemannian(inverse(&metric)?)
        }
        m => ModelParams::curvature(m, cfg.game.rho, cfg.game.epsilon, 1.0),
    };
    let dump = stencil_dump(&grid, &params, idx)?;
    let json = run.out.join("stencil.json");
    write_json(&json, &dump)?;
    let controls: Vec<Vec<([i32; 3], f64)>> =
        dump.controls.iter().map(|c| c.iter().map(|e| (e.offset, e.weight)).collect()).collect();
    let svg = run.out.join("stencil.svg");
    fs::write(&svg, stencil_svg(&controls))?;
    Ok(vec![json, svg])
}
