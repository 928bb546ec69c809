use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, TriMesh};

/// Oriented points drawn from a mesh surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSamples {
    pub points: Vec<Point3<f64>>,
    /// Outward unit normals, one per point.
    pub normals: Vec<Vector3<f64>>,
    /// Face each point was drawn from.
    pub faces: Vec<usize>,
    /// Fingerprint of the source mesh.
    pub mesh_id: u64,
}

impl SurfaceSamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3<f64> {
        let sum: Vector3<f64> = self.points.iter().map(|p| p.coords).sum();
        Point3::from(sum / self.points.len() as f64)
    }

    /// Largest distance of any sample from `origin`.
    pub fn max_radius(&self, origin: &Point3<f64>) -> f64 {
        self.points.iter().map(|p| (p - origin).norm()).fold(0.0, f64::max)
    }

    /// Keeps every k-th sample so at most `cap` remain. Deterministic.
    pub fn thinned(&self, cap: usize) -> SurfaceSamples {
        if self.len() <= cap || cap == 0 {
            return self.clone();
        }
        let idx: Vec<usize> = (0..cap).map(|i| i * self.len() / cap).collect();
        SurfaceSamples {
            points: idx.iter().map(|&i| self.points[i]).collect(),
            normals: idx.iter().map(|&i| self.normals[i]).collect(),
            faces: idx.iter().map(|&i| self.faces[i]).collect(),
            mesh_id: self.mesh_id,
        }
    }
}

/// FNV-1a over vertex bit patterns and face indices.
pub fn mesh_fingerprint(mesh: &TriMesh) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for v in &mesh.vertices {
        v.coords.iter().for_each(|c| eat(c.to_bits()));
    }
    for f in &mesh.faces {
        f.iter().for_each(|&i| eat(i as u64));
    }
    h
}

/// Draws `n` area-uniform surface points with their face normals.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<SurfaceSamples, GeometryError> {
    if mesh.faces.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    if n == 0 {
        return Err(GeometryError::TooFewSamples { requested: n, minimum: 1 });
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SurfaceSamples {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        faces: Vec::with_capacity(n),
        mesh_id: mesh_fingerprint(mesh),
    };
    for _ in 0..n {
        let target = rng.gen::<f64>() * total;
        let face = cumulative.partition_point(|&c| c <= target).min(mesh.faces.len() - 1);
        let [a, b, c] = mesh.face_points(face);
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let p = a.coords * (1.0 - s) + b.coords * (s * (1.0 - r2)) + c.coords * (s * r2);
        out.points.push(Point3::from(p));
        out.normals.push(mesh.face_normal(face));
        out.faces.push(face);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives::{cuboid, icosphere};

    #[test]
    fn cube_faces_receive_area_uniform_counts() {
        let cube = cuboid(Vector3::new(1.0, 1.0, 1.0));
        let s = sample_surface(&cube, 600, 7).unwrap();
        // classify by dominant normal axis and sign
        let mut counts = [0usize; 6];
        for n in &s.normals {
            let axis = n.iamax();
            let k = 2 * axis + usize::from(n[axis] > 0.0);
            counts[k] += 1;
        }
        // exact weights are 1/6 each: expected 100
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 100.0).powi(2) / 100.0).sum();
        assert!(counts.iter().all(|&c| (60..=140).contains(&c)), "{counts:?}");
        // 5 dof, p = 0.001 critical value 20.5
        assert!(chi2 < 20.5, "chi2 = {chi2}");
    }

    #[test]
    fn single_triangle_sample_lies_inside() {
        let tri = TriMesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            false,
        )
        .unwrap();
        let s = sample_surface(&tri, 1, 3).unwrap();
        let p = s.points[0];
        assert!(p.x >= 0.0 && p.y >= 0.0 && p.x + p.y <= 1.0 && p.z == 0.0);
        assert_eq!(s.normals[0], Vector3::z());
    }

    #[test]
    fn sphere_normals_are_radial() {
        let s = sample_surface(&icosphere(1.0, 3), 500, 1).unwrap();
        for (p, n) in s.points.iter().zip(&s.normals) {
            assert!((p.coords.dot(n) - 1.0).abs() < 0.05);
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let m = icosphere(0.5, 2);
        assert_eq!(sample_surface(&m, 50, 11).unwrap(), sample_surface(&m, 50, 11).unwrap());
        assert_ne!(sample_surface(&m, 50, 11).unwrap(), sample_surface(&m, 50, 12).unwrap());
    }
}
