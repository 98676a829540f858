//! File formats: raw little-endian `f64` maps with JSON sidecar headers, CSV
//! paths and iteration logs, JSON documents.

use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::Path;
use crate::grid::{Grid, Point, Rect};
use crate::optimize::IterationRecord;

/// Fixed 17 significant digits, so that identical values print identically.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Sidecar header of a binary map: C-order dims, the rectangle, and an
/// angular flag when the last axis is the heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapHeader {
    pub name: String,
    pub dims: Vec<usize>,
    pub rect: Rect,
    pub angular: bool,
    pub dtype: String,
}

pub const MAP_DTYPE: &str = "f64le";

fn sidecar(bin: &FsPath) -> PathBuf {
    bin.with_extension("json")
}

/// Writes `<dir>/<name>.bin` and its `<name>.json` header.
pub fn write_map(dir: &FsPath, name: &str, dims: &[usize], grid: &Grid, angular: bool, data: &[f64]) -> Result<PathBuf> {
    let expected: usize = dims.iter().product();
    if data.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: data.len() });
    }
    let bin = dir.join(format!("{name}.bin"));
    let mut bytes = Vec::with_capacity(8 * data.len());
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let header = MapHeader {
        name: name.to_string(),
        dims: dims.to_vec(),
        rect: Rect { lower: grid.lower(), upper: grid.upper() },
        angular,
        dtype: MAP_DTYPE.into(),
    };
    write_json(&sidecar(&bin), &header)?;
    Ok(bin)
}

/// Full node map (`[nx, ny]` or `[nx, ny, nθ]`).
pub fn write_node_map(dir: &FsPath, name: &str, grid: &Grid, data: &[f64]) -> Result<PathBuf> {
    let [nx, ny, nt] = grid.dims();
    if grid.is_angular() {
        write_map(dir, name, &[nx, ny, nt], grid, true, data)
    } else {
        write_map(dir, name, &[nx, ny], grid, false, data)
    }
}

/// Per spatial cell map (`[nx, ny]`).
pub fn write_cell_map(dir: &FsPath, name: &str, grid: &Grid, data: &[f64]) -> Result<PathBuf> {
    let [nx, ny, _] = grid.dims();
    write_map(dir, name, &[nx, ny], grid, false, data)
}

pub fn read_map(bin: &FsPath) -> Result<(MapHeader, Vec<f64>)> {
    let header: MapHeader = read_json(&sidecar(bin))?;
    if header.dtype != MAP_DTYPE {
        return Err(Error::Config(format!("{}: unsupported dtype {}", bin.display(), header.dtype)));
    }
    let bytes = fs::read(bin)?;
    let n: usize = header.dims.iter().product();
    if bytes.len() != 8 * n {
        return Err(Error::DimensionMismatch { expected: 8 * n, got: bytes.len() });
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((header, data))
}

pub fn write_json<T: Serialize>(path: &FsPath, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &FsPath) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// `x,y[,theta],cumulative_cost`, one vertex per row.
pub fn path_csv(path: &Path) -> String {
    let angular = path.points.first().is_some_and(|p| p.theta.is_some());
    let mut out = String::from(if angular { "x,y,theta,cumulative_cost\n" } else { "x,y,cumulative_cost\n" });
    for (p, v) in path.points.iter().zip(&path.values) {
        out.push_str(&fmt_f64(p.x));
        out.push(',');
        out.push_str(&fmt_f64(p.y));
        if let Some(t) = p.theta {
            out.push(',');
            out.push_str(&fmt_f64(t));
        }
        out.push(',');
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn write_path_csv(file: &FsPath, path: &Path) -> Result<()> {
    fs::write(file, path_csv(path))?;
    Ok(())
}

pub fn read_path_csv(file: &FsPath) -> Result<Path> {
    let text = fs::read_to_string(file)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config(format!("{}: empty file", file.display())))?;
    let angular = header.split(',').count() == 4;
    let mut path = Path { points: Vec::new(), values: Vec::new() };
    for (n, line) in lines.enumerate() {
        let cols = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", file.display(), n + 2)))?;
        if cols.len() != if angular { 4 } else { 3 } {
            return Err(Error::Config(format!("{}:{}: wrong column count", file.display(), n + 2)));
        }
        path.points.push(Point { x: cols[0], y: cols[1], theta: angular.then(|| cols[2]) });
        path.values.push(cols[cols.len() - 1]);
    }
    Ok(path)
}

pub fn write_log_csv(file: &FsPath, history: &[IterationRecord]) -> Result<()> {
    let mut f = fs::File::create(file)?;
    writeln!(f, "iteration,value,step,gradient_norm")?;
    for r in history {
        writeln!(f, "{},{},{},{}", r.iteration, fmt_f64(r.value), fmt_f64(r.step), fmt_f64(r.gradient_norm))?;
    }
    Ok(())
}
