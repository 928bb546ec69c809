//! Grasp wrench space and Ferrari-Canny quality.
//!
//! Each contact contributes the edges of its discretized friction cone; the
//! GWS is the convex hull of all edge wrenches (force plus scaled torque).
//! The epsilon quality is the distance from the origin to the nearest hull
//! facet and the volume quality is the 6-D hull volume.

mod hull;

use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

pub use hull::{convex_hull, ConvexHull, HullError, HullFacet};

use crate::gpis::householder_tangent_basis;
use crate::hand::Contact;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QualityError {
    #[error("contact {index} has a degenerate normal (|n| = {norm})")]
    DegenerateNormal { index: usize, norm: f64 },
    #[error("friction must be ≥ 0 and cones need ≥ 3 edges (got μ = {friction}, m = {edges})")]
    InvalidCone { friction: f64, edges: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualityParams {
    pub friction: f64,
    pub cone_edges: usize,
    pub volume_weight: f64,
}

impl Default for QualityParams {
    fn default() -> Self {
        Self { friction: 0.5, cone_edges: 8, volume_weight: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WrenchSet {
    pub primitives: Vec<[f64; 6]>,
    pub torque_scale: f64,
    pub friction: f64,
    pub cone_edges: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspQuality {
    pub epsilon: f64,
    pub volume: f64,
    pub force_closure: bool,
    /// The primitives did not span the wrench space.
    pub degenerate: bool,
}

impl GraspQuality {
    pub const ZERO: Self = Self { epsilon: 0.0, volume: 0.0, force_closure: false, degenerate: true };
}

/// Friction-cone edge wrenches. The applied force points into the object,
/// i.e. along `-contact.normal`.
pub fn contact_wrenches(
    contacts: &[Contact],
    friction: f64,
    cone_edges: usize,
    torque_scale: f64,
    origin: &Point3<f64>,
) -> Result<WrenchSet, QualityError> {
    if !(friction >= 0.0) || (friction > 0.0 && cone_edges < 3) {
        return Err(QualityError::InvalidCone { friction, edges: cone_edges });
    }
    let edges = if friction == 0.0 { 1 } else { cone_edges };
    let mut primitives = Vec::with_capacity(contacts.len() * edges);
    for (index, c) in contacts.iter().enumerate() {
        let norm = c.normal.norm();
        if !((norm - 1.0).abs() < 1e-6) {
            return Err(QualityError::DegenerateNormal { index, norm });
        }
        let n = -c.normal / norm;
        let (t1, t2) = tangent_pair(&n, c.tangent.as_ref());
        let arm = (c.point - origin) * torque_scale;
        for j in 0..edges {
            let (s, co) = (TAU * j as f64 / edges as f64).sin_cos();
            let f = n + (t1 * co + t2 * s) * friction;
            let tau = arm.cross(&f);
            primitives.push([f.x, f.y, f.z, tau.x, tau.y, tau.z]);
        }
    }
    Ok(WrenchSet { primitives, torque_scale, friction, cone_edges: edges })
}

fn tangent_pair(n: &Vector3<f64>, hint: Option<&Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let t1 = hint
        .map(|t| t - n * t.dot(n))
        .filter(|t| t.norm() > 1e-9)
        .map(|t| t.normalize())
        .unwrap_or_else(|| householder_tangent_basis(n).column(0).into_owned());
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Builds the 6-D hull once and reads both metrics off it.
pub fn grasp_quality(ws: &WrenchSet) -> GraspQuality {
    let pts: Vec<Vec<f64>> = ws.primitives.iter().map(|w| w.to_vec()).collect();
    match convex_hull(&pts, 6) {
        Ok(h) => {
            let epsilon = h.origin_margin();
            GraspQuality { epsilon, volume: h.volume(), force_closure: epsilon > 0.0, degenerate: false }
        }
        Err(_) => GraspQuality::ZERO,
    }
}

pub fn epsilon_quality(ws: &WrenchSet) -> f64 {
    grasp_quality(ws).epsilon
}

pub fn volume_quality(ws: &WrenchSet) -> f64 {
    grasp_quality(ws).volume
}

/// `1(q_ε > 0)·q_ε + λ_vol·q_vol`.
pub fn objective(epsilon: f64, volume: f64, volume_weight: f64) -> f64 {
    let gated = if epsilon > 0.0 { epsilon } else { 0.0 };
    gated + volume_weight * volume
}

/// A contact in the plane: position and outward unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarContact {
    pub point: [f64; 2],
    pub normal: [f64; 2],
}

/// Planar wrenches `(f_x, f_y, λ_τ τ_z)` from the two edges `n ± μt` of each
/// 2-D friction cone (one edge when μ = 0).
pub fn planar_wrenches(contacts: &[PlanarContact], friction: f64, torque_scale: f64, origin: [f64; 2]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for c in contacts {
        let len = (c.normal[0].powi(2) + c.normal[1].powi(2)).sqrt();
        let n = [-c.normal[0] / len, -c.normal[1] / len];
        let t = [-n[1], n[0]];
        let arm = [(c.point[0] - origin[0]) * torque_scale, (c.point[1] - origin[1]) * torque_scale];
        let signs: &[f64] = if friction == 0.0 { &[0.0] } else { &[1.0, -1.0] };
        for s in signs {
            let f = [n[0] + s * friction * t[0], n[1] + s * friction * t[1]];
            out.push([f[0], f[1], arm[0] * f[1] - arm[1] * f[0]]);
        }
    }
    out
}

/// Epsilon and volume of the 3-D hull of planar wrenches.
pub fn planar_quality(wrenches: &[[f64; 3]]) -> GraspQuality {
    let pts: Vec<Vec<f64>> = wrenches.iter().map(|w| w.to_vec()).collect();
    match convex_hull(&pts, 3) {
        Ok(h) => {
            let epsilon = h.origin_margin();
            GraspQuality { epsilon, volume: h.volume(), force_closure: epsilon > 0.0, degenerate: false }
        }
        Err(_) => GraspQuality::ZERO,
    }
}

/// Object-specific scoring: torque origin at the sample centroid and torque
/// scale 1 / (largest sample distance from it).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub params: QualityParams,
    pub origin: Point3<f64>,
    pub torque_scale: f64,
}

impl QualityModel {
    pub fn new(params: QualityParams, origin: Point3<f64>, max_radius: f64) -> Self {
        Self { params, origin, torque_scale: 1.0 / max_radius.max(1e-12) }
    }

    pub fn evaluate(&self, contacts: &[Contact]) -> Result<GraspQuality, QualityError> {
        if contacts.is_empty() {
            return Ok(GraspQuality::ZERO);
        }
        let ws = contact_wrenches(contacts, self.params.friction, self.params.cone_edges, self.torque_scale, &self.origin)?;
        Ok(grasp_quality(&ws))
    }

    pub fn objective(&self, q: &GraspQuality) -> f64 {
        objective(q.epsilon, q.volume, self.params.volume_weight)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::LinkKind;

    fn contact(p: [f64; 3], outward: [f64; 3]) -> Contact {
        Contact {
            point: Point3::from(p),
            normal: Vector3::from(outward).normalize(),
            link: LinkKind::Distal,
            finger: Some(0),
            value: 0.0,
            tangent: None,
        }
    }

    #[test]
    fn frictionless_point_at_origin() {
        let ws = contact_wrenches(&[contact([0.0; 3], [0.0, 0.0, -1.0])], 0.0, 8, 1.0, &Point3::origin()).unwrap();
        assert_eq!(ws.primitives, vec![[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]]);
    }

    #[test]
    fn cone_edges_at_friction_angle() {
        let c = contact([0.3, 0.1, -0.2], [0.2, -0.5, 0.8]);
        let ws = contact_wrenches(&[c], 0.5, 8, 1.0, &Point3::origin()).unwrap();
        assert_eq!(ws.primitives.len(), 8);
        let n = -c.normal;
        for w in &ws.primitives {
            let f = Vector3::new(w[0], w[1], w[2]);
            assert!((f.angle(&n) - 0.5f64.atan()).abs() < 1e-12);
            assert!((f.dot(&n) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn torque_orthogonal_to_force() {
        // p − o ⊥ f for a frictionless contact pushing along the arm's normal
        let c = contact([0.0, 0.2, 0.0], [0.0, 0.0, 1.0]);
        let ws = contact_wrenches(&[c], 0.0, 1, 2.0, &Point3::origin()).unwrap();
        let w = ws.primitives[0];
        let f = Vector3::new(w[0], w[1], w[2]);
        let t = Vector3::new(w[3], w[4], w[5]);
        assert!(t.dot(&f).abs() < 1e-15);
        let expected = (Vector3::new(0.0, 0.2, 0.0) * 2.0).cross(&f);
        assert!((t - expected).norm() < 1e-15);
    }

    #[test]
    fn degenerate_normal_rejected() {
        let mut c = contact([0.0; 3], [1.0, 0.0, 0.0]);
        c.normal = Vector3::zeros();
        assert!(matches!(
            contact_wrenches(&[c], 0.5, 8, 1.0, &Point3::origin()),
            Err(QualityError::DegenerateNormal { index: 0, .. })
        ));
    }

    #[test]
    fn single_contact_has_no_closure() {
        let m = QualityModel::new(QualityParams::default(), Point3::origin(), 1.0);
        let q = m.evaluate(&[contact([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])]).unwrap();
        assert_eq!(q.epsilon, 0.0);
        assert_eq!(q.volume, 0.0);
        assert!(!q.force_closure);
    }

    #[test]
    fn objective_examples() {
        assert_eq!(objective(0.0, 0.001, 1.0), 0.001);
        assert!((objective(0.0555, 0.0097, 1.0) - 0.0652).abs() < 1e-12);
        assert_eq!(objective(0.3, 0.0, 5.0), 0.3);
    }

    #[test]
    fn antipodal_sphere_contacts_close() {
        let m = QualityModel::new(QualityParams::default(), Point3::origin(), 1.0);
        let q = m
            .evaluate(&[contact([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]), contact([0.0, 0.0, -1.0], [0.0, 0.0, -1.0])])
            .unwrap();
        // two point contacts cannot resist torque about their common axis
        assert_eq!(q.epsilon, 0.0);
        let q3 = m
            .evaluate(&[
                contact([0.0, 0.0, 1.0], [0.0, 0.0, 1.0]),
                contact([0.0, 0.0, -1.0], [0.0, 0.0, -1.0]),
                contact([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                contact([-1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]),
            ])
            .unwrap();
        assert!(q3.epsilon > 0.0 && q3.volume > 0.0);
    }
}
