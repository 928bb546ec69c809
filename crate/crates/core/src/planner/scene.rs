use nalgebra::Isometry3;
use serde::{Deserialize, Serialize};

use super::{GraspCandidate, PlannerError, Provenance};
use crate::geometry::{compute_aabb, sample_surface, Aabb, SurfaceKdTree, SurfaceSamples, TriMesh};
use crate::gpis::{fit_gpis, GpisConfig, GpisModel};
use crate::hand::{Contact, ContactParams, HandError, HandModel, HandState};
use crate::posedomain::{EllipsoidPair, FlatPolicy, PoseDomain, PoseRecord};
use crate::quality::{QualityModel, QualityParams};

/// How a scene is built from a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub surface_samples: usize,
    pub sample_seed: u64,
    /// Outer pose box = object box scaled by this factor.
    pub outer_scale: f64,
    /// Semi-axis used for flat boxes.
    pub flat_inflate: f64,
    /// GPIS settings; scaled to the object box when absent.
    pub gpis: Option<GpisConfig>,
    pub quality: QualityParams,
    pub contact: ContactParams,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            surface_samples: 200,
            sample_seed: 0,
            outer_scale: 2.5,
            flat_inflate: 1e-3,
            gpis: None,
            quality: QualityParams::default(),
            contact: ContactParams::default(),
        }
    }
}

/// Everything a planner needs about one object and one hand.
#[derive(Debug, Clone)]
pub struct Scene {
    pub gpis: GpisModel,
    pub tree: SurfaceKdTree,
    pub hand: HandModel,
    pub domain: PoseDomain,
    pub quality: QualityModel,
    pub aabb: Aabb,
    pub contact: ContactParams,
}

impl Scene {
    pub fn from_mesh(mesh: &TriMesh, hand: HandModel, cfg: &SceneConfig) -> Result<Self, PlannerError> {
        let samples = sample_surface(mesh, cfg.surface_samples, cfg.sample_seed)?;
        let aabb = compute_aabb(mesh, 1.0);
        let gpis_cfg = cfg.gpis.unwrap_or_else(|| GpisConfig::for_aabb(&aabb));
        let gpis = fit_gpis(&samples, &gpis_cfg)?;
        Self::assemble(gpis, samples, aabb, hand, cfg)
    }

    /// Uses an already fitted model; `samples` feed the kD-tree.
    pub fn from_parts(
        gpis: GpisModel,
        samples: SurfaceSamples,
        aabb: Aabb,
        hand: HandModel,
        cfg: &SceneConfig,
    ) -> Result<Self, PlannerError> {
        Self::assemble(gpis, samples, aabb, hand, cfg)
    }

    fn assemble(
        gpis: GpisModel,
        samples: SurfaceSamples,
        aabb: Aabb,
        hand: HandModel,
        cfg: &SceneConfig,
    ) -> Result<Self, PlannerError> {
        hand.validate()?;
        let ellipsoids = EllipsoidPair::around(&aabb, cfg.outer_scale, FlatPolicy::Inflate(cfg.flat_inflate))?;
        let origin = samples.centroid();
        let quality = QualityModel::new(cfg.quality, origin, samples.max_radius(&origin));
        let tree = SurfaceKdTree::new(samples, SurfaceKdTree::DEFAULT_LEAF_SIZE);
        Ok(Self { gpis, tree, hand, domain: PoseDomain::new(ellipsoids), quality, aabb, contact: cfg.contact })
    }

    /// Closes the hand at `palm` (from `start`, or the open hand) and scores
    /// the result. `None` when the palm or the opened fingers collide.
    pub fn evaluate(
        &self,
        palm: &Isometry3<f64>,
        start: Option<&HandState>,
        provenance: Provenance,
    ) -> Result<Option<GraspCandidate>, PlannerError> {
        let pose = PoseRecord::from(palm);
        let palm = pose.isometry();
        let open = HandState::open(self.hand.spread.min);
        let outcome = match self.hand.auto_grasp_from(&palm, start.unwrap_or(&open), &self.gpis, &self.contact) {
            Ok(o) => o,
            Err(HandError::InitialCollision { .. }) => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let (epsilon, volume, objective) = self.score(&outcome.contacts)?;
        Ok(Some(GraspCandidate {
            pose,
            q: outcome.state.q,
            breakaway: outcome.state.breakaway,
            contacts: outcome.contacts,
            epsilon,
            volume,
            objective,
            provenance,
        }))
    }

    /// Re-derives the contacts of a logged candidate and returns its objective.
    pub fn rescore(&self, candidate: &GraspCandidate) -> Result<f64, PlannerError> {
        let state = HandState { q: candidate.q, breakaway: candidate.breakaway };
        let contacts = self.hand.contacts_at(&candidate.pose.isometry(), &state, &self.gpis, &self.contact)?;
        Ok(self.score(&contacts)?.2)
    }

    /// Open-hand collision test at `palm`.
    pub fn open_hand_collides(&self, palm: &Isometry3<f64>) -> Result<bool, PlannerError> {
        let open = HandState::open(self.hand.spread.min);
        Ok(self.hand.check_collision(palm, &open, &self.gpis, &self.contact)?.colliding)
    }

    fn score(&self, contacts: &[Contact]) -> Result<(f64, f64, f64), PlannerError> {
        let q = self.quality.evaluate(contacts)?;
        Ok((q.epsilon, q.volume, self.quality.objective(&q)))
    }
}
