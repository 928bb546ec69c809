use std::path::Path;

use graspbo::gpis::chart_from_gradient;
use graspbo::hand::{Contact, HandModel, HandState};
use graspbo::planner::{GraspCandidate, Scene};
use graspbo::posedomain::PoseRecord;
use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};

use crate::bundle::ResultBundle;
use crate::config::ObjectSpec;
use crate::error::{CliError, Result};
use crate::io::{check_format, read_json};
use crate::model::build_scene;

pub const SCENE_FORMAT: &str = "graspbo-scene";
pub const SCENE_VERSION: u32 = 1;

pub const BODY_NAMES: [&str; 7] = [
    "palm",
    "finger1_proximal",
    "finger1_distal",
    "finger2_proximal",
    "finger2_distal",
    "finger3_proximal",
    "finger3_distal",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub name: String,
    pub source: ObjectSpec,
    pub mesh_fingerprint: u64,
    /// Object frame in the world; the planners work in the object frame.
    pub transform: PoseRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneBody {
    pub name: String,
    pub transform: PoseRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneChart {
    pub center: [f64; 3],
    pub normal: [f64; 3],
    /// Tangent basis columns.
    pub basis: [[f64; 3]; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGrasp {
    pub seed: u64,
    pub rank: usize,
    pub q: [f64; 4],
    pub breakaway: [f64; 3],
    pub epsilon: f64,
    pub volume: f64,
    pub objective: f64,
}

/// A single grasp laid out for an external viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneFile {
    pub format: String,
    pub version: u32,
    pub object: SceneObject,
    pub hand: HandModel,
    pub grasp: SceneGrasp,
    /// Palm, then proximal and distal link per finger.
    pub bodies: Vec<SceneBody>,
    pub contacts: Vec<Contact>,
    /// Tangent chart at the surface point nearest the palm.
    pub chart: SceneChart,
}

impl SceneFile {
    pub fn load(path: &Path) -> Result<Self> {
        let file: SceneFile = read_json(path)?;
        check_format(path, &file.format, file.version, SCENE_FORMAT, SCENE_VERSION)?;
        if file.bodies.len() != BODY_NAMES.len() {
            return Err(CliError::Input(format!("{}: expected 7 bodies, found {}", path.display(), file.bodies.len())));
        }
        Ok(file)
    }

    pub fn body_isometries(&self) -> Vec<Isometry3<f64>> {
        self.bodies.iter().map(|b| b.transform.isometry()).collect()
    }
}

pub fn scene_for_candidate(
    scene: &Scene,
    bundle: &ResultBundle,
    rank: usize,
    candidate: &GraspCandidate,
    seed: u64,
) -> Result<SceneFile> {
    let palm = candidate.pose.isometry();
    let state = HandState { q: candidate.q, breakaway: candidate.breakaway };
    let kin = scene.hand.forward_kinematics(&palm, &state).map_err(|e| CliError::Internal(e.to_string()))?;
    let bodies = kin
        .body_frames()
        .iter()
        .zip(BODY_NAMES)
        .map(|(iso, name)| SceneBody { name: name.into(), transform: PoseRecord::from(iso) })
        .collect();

    let hit = scene.tree.nearest(&palm.translation.vector.into());
    let (_, grad) = scene.gpis.query(&hit.point);
    let radius = bundle.config.planner_config.atlas.chart_radius * scene.aabb.diagonal();
    let chart = chart_from_gradient(&hit.point, &grad, radius).map_err(|e| CliError::Internal(e.to_string()))?;
    let col = |j: usize| [chart.basis[(0, j)], chart.basis[(1, j)], chart.basis[(2, j)]];

    Ok(SceneFile {
        format: SCENE_FORMAT.into(),
        version: SCENE_VERSION,
        object: SceneObject {
            name: bundle.object.clone(),
            source: bundle.config.object.clone(),
            mesh_fingerprint: bundle.mesh_fingerprint,
            transform: PoseRecord::from(&Isometry3::identity()),
        },
        hand: scene.hand,
        grasp: SceneGrasp {
            seed,
            rank,
            q: candidate.q,
            breakaway: candidate.breakaway,
            epsilon: candidate.epsilon,
            volume: candidate.volume,
            objective: candidate.objective,
        },
        bodies,
        contacts: candidate.contacts.clone(),
        chart: SceneChart {
            center: chart.center.coords.into(),
            normal: chart.normal.into(),
            basis: [col(0), col(1)],
            radius: chart.radius,
        },
    })
}

/// Scene of the `rank`-th merged candidate of a bundle.
pub fn export_scene(bundle: &ResultBundle, rank: usize) -> Result<SceneFile> {
    let entry = bundle.top.get(rank).ok_or_else(|| {
        CliError::Input(format!("candidate {rank} out of range; the bundle holds {}", bundle.top.len()))
    })?;
    let (object, scene) = build_scene(&bundle.config)?;
    if object.fingerprint != bundle.mesh_fingerprint {
        return Err(CliError::Input(format!("the mesh of {} changed since the bundle was written", object.label)));
    }
    scene_for_candidate(&scene, bundle, rank, &entry.candidate, entry.seed)
}
