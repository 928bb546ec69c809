use std::path::{Path, PathBuf};

use graspbo::geometry::primitives::{cuboid, cylinder, icosphere, mug};
use graspbo::geometry::{load_mesh, LoadOptions, TriMesh};
use graspbo::hand::HandModel;
use graspbo::planner::{PlannerConfig, PlannerKind, SceneConfig};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where the object mesh comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSource {
    /// OFF or OBJ file; relative paths resolve against the config file.
    Path(PathBuf),
    Sphere {
        radius: f64,
        #[serde(default = "default_subdivisions")]
        subdivisions: u32,
    },
    Box {
        extents: [f64; 3],
    },
    Cylinder {
        radius: f64,
        height: f64,
        #[serde(default = "default_segments")]
        segments: usize,
    },
    Mug {
        radius: f64,
        height: f64,
    },
}

fn default_subdivisions() -> u32 {
    3
}

fn default_segments() -> usize {
    32
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    /// Label used in file names and comparison tables.
    #[serde(default)]
    pub name: Option<String>,
    pub mesh: MeshSource,
    /// Uniform scale applied after loading.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl ObjectSpec {
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.mesh {
            MeshSource::Path(p) => p.file_stem().map_or("object".into(), |s| s.to_string_lossy().into_owned()),
            MeshSource::Sphere { .. } => "sphere".into(),
            MeshSource::Box { .. } => "box".into(),
            MeshSource::Cylinder { .. } => "cylinder".into(),
            MeshSource::Mug { .. } => "mug".into(),
        }
    }

    pub fn load(&self) -> Result<TriMesh, CliError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(CliError::Input(format!("object scale must be positive, got {}", self.scale)));
        }
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        let mesh = match &self.mesh {
            MeshSource::Path(p) => load_mesh(p, None, LoadOptions::default())
                .map_err(|e| CliError::Input(format!("mesh {}: {e}", p.display())))?,
            MeshSource::Sphere { radius, subdivisions } if positive(&[*radius]) => icosphere(*radius, *subdivisions),
            MeshSource::Box { extents } if positive(extents) => cuboid(Vector3::from(*extents)),
            MeshSource::Cylinder { radius, height, segments } if positive(&[*radius, *height]) && *segments >= 3 => {
                cylinder(*radius, *height, *segments)
            }
            MeshSource::Mug { radius, height } if positive(&[*radius, *height]) => mug(*radius, *height),
            other => return Err(CliError::Input(format!("invalid primitive dimensions in {other:?}"))),
        };
        Ok(if self.scale == 1.0 { mesh } else { mesh.scaled(self.scale) })
    }
}

fn default_planner() -> PlannerKind {
    PlannerKind::Hpp
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// One experiment: object, hand, settings, planner and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub object: ObjectSpec,
    /// Hand description file; the built-in three-finger hand when absent.
    #[serde(default)]
    pub hand: Option<PathBuf>,
    /// Model written by `fit-gpis`; fitted on the fly when absent.
    #[serde(default)]
    pub gpis_model: Option<PathBuf>,
    #[serde(default)]
    pub scene: SceneConfig,
    #[serde(default = "default_planner")]
    pub planner: PlannerKind,
    #[serde(default)]
    pub planner_config: PlannerConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Evaluations for the baselines; the HPP budget of `planner_config` when absent.
    #[serde(default)]
    pub evals: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Minimal config for an object with every other field at its default.
    pub fn for_object(object: ObjectSpec) -> Self {
        Self {
            object,
            hand: None,
            gpis_model: None,
            scene: SceneConfig::default(),
            planner: default_planner(),
            planner_config: PlannerConfig::default(),
            seeds: default_seeds(),
            evals: None,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    /// Reads a config and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let MeshSource::Path(p) = &mut self.object.mesh {
            fix(p);
        }
        if let Some(p) = &mut self.hand {
            fix(p);
        }
        if let Some(p) = &mut self.gpis_model {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seeds.is_empty() {
            return Err(CliError::Input("at least one seed is required".into()));
        }
        if self.evals == Some(0) {
            return Err(CliError::Input("evals must be ≥ 1".into()));
        }
        self.planner_config.validate().map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn load_hand(&self) -> Result<HandModel, CliError> {
        match &self.hand {
            Some(p) => HandModel::load(p).map_err(|e| CliError::Input(e.to_string())),
            None => Ok(HandModel::barrett()),
        }
    }

    /// Evaluation count given to the baselines.
    pub fn baseline_evals(&self) -> usize {
        self.evals.unwrap_or_else(|| self.planner_config.hpp_evaluation_budget())
    }
}

/// Parses `a..b` (inclusive), `a..=b`, or a comma-separated list.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let bad = |_| format!("invalid seed list `{text}` (expected e.g. 0..19 or 1,2,5)");
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse().map_err(bad)?, b.trim().parse().map_err(bad)?);
        if a > b {
            return Err(format!("empty seed range `{text}`"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse::<u64>().map_err(bad)).collect()
}
