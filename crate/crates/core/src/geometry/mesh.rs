use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Minimum accepted triangle area (m²).
pub const MIN_FACE_AREA: f64 = 1e-12;

/// Indexed triangle mesh. Coordinates are meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Builds a mesh and validates indices, finiteness and face areas.
    ///
    /// With `drop_degenerate` set, zero-area faces are removed instead of
    /// rejected.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
        drop_degenerate: bool,
    ) -> Result<Self, GeometryError> {
        if let Some(i) = vertices.iter().position(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite { vertex: i });
        }
        let mut kept = Vec::with_capacity(faces.len());
        for (fi, f) in faces.into_iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(GeometryError::IndexOutOfRange {
                    face: fi,
                    index: bad,
                    vertex_count: vertices.len(),
                });
            }
            let area = triangle_area(&vertices[f[0]], &vertices[f[1]], &vertices[f[2]]);
            if area <= MIN_FACE_AREA {
                if drop_degenerate {
                    continue;
                }
                return Err(GeometryError::DegenerateFace { face: fi, area });
            }
            kept.push(f);
        }
        if kept.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        Ok(Self { vertices, faces: kept })
    }

    pub fn face_points(&self, face: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_points(face);
        triangle_area(&a, &b, &c)
    }

    /// Unit normal following the counter-clockwise winding.
    pub fn face_normal(&self, face: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_points(face);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area-weighted centroid of the surface.
    pub fn surface_centroid(&self) -> Point3<f64> {
        let mut acc = Vector3::zeros();
        let mut total = 0.0;
        for f in 0..self.faces.len() {
            let [a, b, c] = self.face_points(f);
            let w = triangle_area(&a, &b, &c);
            acc += w * (a.coords + b.coords + c.coords) / 3.0;
            total += w;
        }
        Point3::from(acc / total)
    }

    /// Uniformly rescales every vertex about the origin.
    pub fn scaled(mut self, scale: f64) -> Self {
        for v in &mut self.vertices {
            v.coords *= scale;
        }
        self
    }

    /// Translates every vertex.
    pub fn translated(mut self, offset: Vector3<f64>) -> Self {
        for v in &mut self.vertices {
            *v += offset;
        }
        self
    }

    /// Concatenates two meshes without welding vertices.
    pub fn merged(mut self, other: &TriMesh) -> Self {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + base, f[1] + base, f[2] + base]));
        self
    }
}

pub fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}
