use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::TriMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3<f64>,
    pub max: Point3<f64>,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3<f64>>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Self { min, max })
    }

    pub fn center(&self) -> Point3<f64> {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extents(&self) -> Vector3<f64> {
        self.max - self.min
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        self.extents() / 2.0
    }

    pub fn diagonal(&self) -> f64 {
        self.extents().norm()
    }

    /// Box scaled by `factor` about its own center.
    pub fn scaled(&self, factor: f64) -> Self {
        let c = self.center();
        let h = self.half_extents() * factor;
        Self { min: c - h, max: c + h }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.min) && self.contains(&other.max)
    }
}

/// Tight box around the mesh vertices, scaled about its center by `margin`.
pub fn compute_aabb(mesh: &TriMesh, margin: f64) -> Aabb {
    Aabb::from_points(&mesh.vertices)
        .expect("mesh has vertices by construction")
        .scaled(margin)
}
