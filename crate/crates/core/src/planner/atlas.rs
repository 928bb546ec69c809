use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Point3, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraspCandidate, PlannerError, Provenance, Scene};
use crate::gpis::{chart_from_gradient, chart_point, Chart};
use crate::posedomain::chart_aligned_pose_at;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtlasParams {
    pub n_seed: usize,
    /// Largest standoff along the chart normal (m).
    pub lambda_max: f64,
    pub lambda_step: f64,
    /// Roll increment about the palm axis once the standoff is exhausted.
    pub theta_step: f64,
    /// Chart radius as a fraction of the object box diagonal.
    pub chart_radius: f64,
}

impl Default for AtlasParams {
    fn default() -> Self {
        Self { n_seed: 5, lambda_max: 0.08, lambda_step: 0.005, theta_step: PI / 8.0, chart_radius: 0.25 }
    }
}

/// One seed of the local adaption.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasSeed {
    pub anchor: Point3<f64>,
    pub palm: Option<Isometry3<f64>>,
    pub lambda: f64,
    pub theta_z: f64,
    pub candidate: Option<GraspCandidate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtlasOutcome {
    pub chart: Chart,
    pub seeds: Vec<AtlasSeed>,
}

impl AtlasOutcome {
    pub fn candidates(&self) -> impl Iterator<Item = &GraspCandidate> {
        self.seeds.iter().filter_map(|s| s.candidate.as_ref())
    }

    /// Grasps actually executed.
    pub fn evaluations(&self) -> usize {
        self.seeds.iter().filter(|s| s.palm.is_some()).count()
    }
}

/// Local adaption around the surface point nearest to `palm_translation`:
/// each seed picks a random chart point, backs the palm off along the chart
/// normal until the open hand is free, then rolls it, and closes the hand.
pub fn gpis_atlas(
    scene: &Scene,
    palm_translation: &Point3<f64>,
    params: &AtlasParams,
    rng: &mut ChaCha8Rng,
) -> Result<AtlasOutcome, PlannerError> {
    let hit = scene.tree.nearest(palm_translation);
    let (_, grad) = scene.gpis.query(&hit.point);
    let radius = params.chart_radius * scene.aabb.diagonal();
    let chart = chart_from_gradient(&hit.point, &grad, radius)?;
    let lambda_steps = (params.lambda_max / params.lambda_step).ceil() as usize;

    let mut seeds = Vec::with_capacity(params.n_seed);
    for _ in 0..params.n_seed {
        let r = radius * rng.gen::<f64>().sqrt();
        let a = TAU * rng.gen::<f64>();
        let anchor = chart_point(&chart, &Vector2::new(r * a.cos(), r * a.sin()))?;

        let mut k = 0;
        let mut theta_z = 0.0;
        let found = loop {
            let lambda = (k as f64 * params.lambda_step).min(params.lambda_max);
            let palm = chart_aligned_pose_at(&anchor, &chart.normal, lambda, theta_z);
            if !scene.open_hand_collides(&palm)? {
                break Some((palm, lambda));
            }
            if k < lambda_steps {
                k += 1;
            } else {
                theta_z += params.theta_step;
                if theta_z >= TAU - 1e-12 {
                    break None;
                }
            }
        };
        let seed = match found {
            Some((palm, lambda)) => AtlasSeed {
                anchor,
                palm: Some(palm),
                lambda,
                theta_z,
                candidate: scene.evaluate(&palm, None, Provenance::Hpp)?,
            },
            None => AtlasSeed { anchor, palm: None, lambda: params.lambda_max, theta_z, candidate: None },
        };
        seeds.push(seed);
    }
    if params.n_seed > 0 && seeds.iter().all(|s| s.palm.is_none()) {
        return Err(PlannerError::AdaptionFailed { seeds: params.n_seed });
    }
    Ok(AtlasOutcome { chart, seeds })
}
