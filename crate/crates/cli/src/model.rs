use std::path::Path;

use graspbo::geometry::{compute_aabb, mesh_fingerprint, sample_surface, Aabb, SurfaceSamples, TriMesh};
use graspbo::gpis::{fit_gpis, GpisConfig, GpisDocument, GpisModel};
use graspbo::planner::Scene;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{check_format, read_json};

pub const MODEL_FORMAT: &str = "graspbo-gpis-model";
pub const MODEL_VERSION: u32 = 1;
/// Fresh surface samples used to report the fit quality.
pub const HELDOUT_SAMPLES: usize = 500;

/// A fitted implicit surface, reusable by `plan` for the same mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub object: String,
    pub mesh_fingerprint: u64,
    pub surface_samples: usize,
    pub sample_seed: u64,
    pub config: GpisConfig,
    pub model: GpisDocument,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = read_json(path)?;
        check_format(path, &file.format, file.version, MODEL_FORMAT, MODEL_VERSION)?;
        Ok(file)
    }

    pub fn gpis(&self) -> Result<GpisModel> {
        GpisModel::from_document(&self.model).map_err(|e| CliError::Input(format!("stored model: {e}")))
    }
}

/// |f| on surface points that were not used for fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeldOutStats {
    pub samples: usize,
    pub seed: u64,
    pub mean_abs: f64,
    pub rms: f64,
    pub max_abs: f64,
    /// Object bounding-box diagonal.
    pub diagonal: f64,
    /// `mean_abs / diagonal`.
    pub mean_abs_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub object: String,
    pub mesh_fingerprint: u64,
    pub training_points: usize,
    pub config: GpisConfig,
    /// Largest |f| over the surface training points.
    pub max_surface_residual: f64,
    pub heldout: HeldOutStats,
}

/// Mesh, kD-tree samples and bounding box of the configured object.
pub struct ObjectData {
    pub label: String,
    pub mesh: TriMesh,
    pub fingerprint: u64,
    pub samples: SurfaceSamples,
    pub aabb: Aabb,
}

impl ObjectData {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let mesh = cfg.object.load()?;
        let samples = sample_surface(&mesh, cfg.scene.surface_samples, cfg.scene.sample_seed)
            .map_err(|e| CliError::Input(format!("surface sampling: {e}")))?;
        Ok(Self {
            label: cfg.object.label(),
            fingerprint: mesh_fingerprint(&mesh),
            aabb: compute_aabb(&mesh, 1.0),
            mesh,
            samples,
        })
    }

    pub fn gpis_config(&self, cfg: &RunConfig) -> GpisConfig {
        cfg.scene.gpis.unwrap_or_else(|| GpisConfig::for_aabb(&self.aabb))
    }
}

pub fn fit_model(cfg: &RunConfig) -> Result<(ModelFile, FitReport)> {
    let object = ObjectData::load(cfg)?;
    let gpis_cfg = object.gpis_config(cfg);
    let gpis = fit_gpis(&object.samples, &gpis_cfg).map_err(|e| CliError::Internal(format!("GPIS fit: {e}")))?;

    let seed = cfg.scene.sample_seed.wrapping_add(1);
    let heldout = sample_surface(&object.mesh, HELDOUT_SAMPLES, seed)
        .map_err(|e| CliError::Input(format!("surface sampling: {e}")))?;
    let values: Vec<f64> = heldout.points.iter().map(|p| gpis.value(p).abs()).collect();
    let n = values.len() as f64;
    let mean_abs = values.iter().sum::<f64>() / n;
    let diagonal = object.aabb.diagonal();
    let report = FitReport {
        object: object.label.clone(),
        mesh_fingerprint: object.fingerprint,
        training_points: gpis.training_len(),
        config: gpis_cfg,
        max_surface_residual: gpis.max_surface_residual(),
        heldout: HeldOutStats {
            samples: values.len(),
            seed,
            mean_abs,
            rms: (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            max_abs: values.iter().cloned().fold(0.0, f64::max),
            diagonal,
            mean_abs_relative: mean_abs / diagonal,
        },
    };
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        object: object.label,
        mesh_fingerprint: object.fingerprint,
        surface_samples: cfg.scene.surface_samples,
        sample_seed: cfg.scene.sample_seed,
        config: gpis_cfg,
        model: gpis.to_document(),
    };
    Ok((file, report))
}

/// Scene for the configured object, reusing the stored model when one is given.
pub fn build_scene(cfg: &RunConfig) -> Result<(ObjectData, Scene)> {
    let hand = cfg.load_hand()?;
    let object = ObjectData::load(cfg)?;
    let scene = match &cfg.gpis_model {
        Some(path) => {
            let file = ModelFile::load(path)?;
            if file.mesh_fingerprint != object.fingerprint {
                return Err(CliError::Input(format!(
                    "{} was fitted on a different mesh ({}) than {}",
                    path.display(),
                    file.object,
                    object.label
                )));
            }
            if file.config != object.gpis_config(cfg) {
                tracing::warn!(model = %path.display(), "stored model used GPIS settings that differ from the config");
            }
            Scene::from_parts(file.gpis()?, object.samples.clone(), object.aabb, hand, &cfg.scene)?
        }
        None => Scene::from_mesh(&object.mesh, hand, &cfg.scene)?,
    };
    Ok((object, scene))
}
