//! Run configuration files and the shipped default scenes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{CameraSet, GameSpec, PaintField, RadarSet, SensorConfig, RADAR_REGION};
use crate::grid::{build_grid, Grid, GridSpec, MaskHeader, Obstacle};
use crate::stencils::Model;

pub const SCHEMA_VERSION: u32 = 1;

fn schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeOptions {
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_memory")]
    pub memory: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_iterations() -> usize {
    100
}
fn default_memory() -> usize {
    10
}
fn default_tolerance() -> f64 {
    1e-10
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions { max_iterations: default_iterations(), memory: default_memory(), tolerance: default_tolerance() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema")]
    pub schema: u32,
    pub grid: GridSpec,
    /// Raw byte mask (`0` free) replacing the rasterised obstacles; its
    /// header is the sibling `.json` file. Relative to the config file.
    #[serde(default)]
    pub mask_file: Option<PathBuf>,
    pub game: GameSpec,
    pub sensors: SensorConfig,
    #[serde(default)]
    pub optimize: OptimizeOptions,
    /// Metric used by `stencil-dump` for the Riemannian model when the
    /// sensors do not define one.
    #[serde(default)]
    pub metric: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
    /// Random seed for the gradient check coordinate sample.
    #[serde(default)]
    pub seed: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn new(grid: GridSpec, game: GameSpec, sensors: SensorConfig) -> Self {
        RunConfig {
            schema: SCHEMA_VERSION,
            grid,
            mask_file: None,
            game,
            sensors,
            optimize: OptimizeOptions::default(),
            metric: None,
            out_dir: None,
            plot: false,
            seed: 0,
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{origin}: schema version {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(m) = &cfg.mask_file {
            let full = cfg.base_dir.join(m);
            if !full.exists() {
                return Err(Error::Config(format!("{}: mask file {} not found", path.display(), full.display())));
            }
        }
        Ok(cfg)
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let ntheta = if self.game.model.is_curvature() {
            Some(self.grid.ntheta.ok_or_else(|| Error::Config("curvature models need grid.ntheta".into()))?)
        } else {
            None
        };
        match &self.mask_file {
            None => {
                let mut spec = self.grid.clone();
                spec.ntheta = ntheta;
                build_grid(&spec)
            }
            Some(m) => {
                let bin = self.base_dir.join(m);
                let header: MaskHeader = crate::io::read_json(&bin.with_extension("json"))?;
                let bytes = std::fs::read(&bin)?;
                Grid::from_mask_bytes(&header, &bytes, ntheta)
            }
        }
    }
}

/// Obstacles of the shipped scenes on `[0, 2] × [0, 1]`.
pub fn default_obstacles() -> Vec<Obstacle> {
    vec![
        Obstacle::Box { lower: [0.55, 0.0], upper: [0.65, 0.4] },
        Obstacle::Box { lower: [0.55, 0.6], upper: [0.65, 1.0] },
        Obstacle::Disc { center: [1.1, 0.45], radius: 0.15 },
        Obstacle::Box { lower: [1.25, 0.0], upper: [1.35, 0.2] },
        Obstacle::Box { lower: [1.25, 0.8], upper: [1.35, 1.0] },
    ]
}

/// The standard grid: 180 × 89 cells, 60 headings for curvature models.
pub fn standard_grid(model: Model, obstacles: bool) -> GridSpec {
    let spec = GridSpec::rectangle([0.0, 0.0], [2.0, 1.0], 180, 89);
    let spec = if model.is_curvature() { spec.with_angles(60) } else { spec };
    if obstacles {
        spec.with_obstacles(default_obstacles())
    } else {
        spec
    }
}

pub const SCENES: [&str; 6] = ["free", "paint", "camera", "radar", "radar-anisotropic", "radar-dubins"];

/// Shipped scene by name.
pub fn default_scene(name: &str, model: Model) -> Result<RunConfig> {
    let game = GameSpec::new(model);
    let radars = |delta| {
        SensorConfig::Radar(RadarSet { positions: vec![[0.6, 0.3], [1.0, 0.7], [1.4, 0.3]], delta, region: RADAR_REGION })
    };
    let (grid, sensors) = match name {
        "free" => (standard_grid(model, true), SensorConfig::Free),
        "paint" => (standard_grid(model, true), SensorConfig::Paint(PaintField::uniform(0.5))),
        "camera" => (
            standard_grid(model, true),
            SensorConfig::Camera(CameraSet { positions: vec![[0.9, 0.85], [1.45, 0.15]], background: 0.05 }),
        ),
        "radar" => (standard_grid(model, false), radars(1.0)),
        "radar-anisotropic" => (standard_grid(model, false), radars(0.2)),
        "radar-dubins" => (standard_grid(Model::Dubins, false), radars(0.2)),
        _ => return Err(Error::Config(format!("unknown scene {name}; known: {}", SCENES.join(", ")))),
    };
    let game = if name == "radar-dubins" { GameSpec::new(Model::Dubins) } else { game };
    Ok(RunConfig::new(grid, game, sensors))
}
