//! Procedural test objects with outward (counter-clockwise) winding.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};

use super::TriMesh;

/// Geodesic sphere from a subdivided icosahedron, centered at the origin.
/// `subdivisions = 3` gives 642 vertices.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3<f64>> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vector3<f64>>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push((verts[a] + verts[b]).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| Point3::from(v * radius)).collect();
    TriMesh { vertices, faces }
}

/// Axis-aligned ellipsoid obtained by stretching an icosphere.
pub fn ellipsoid(semi_axes: Vector3<f64>, subdivisions: u32) -> TriMesh {
    let mut m = icosphere(1.0, subdivisions);
    for v in &mut m.vertices {
        v.coords.component_mul_assign(&semi_axes);
    }
    m
}

/// Axis-aligned box with the given full extents, centered at the origin.
pub fn cuboid(extents: Vector3<f64>) -> TriMesh {
    let h = extents / 2.0;
    let vertices = (0..8)
        .map(|i| {
            Point3::new(
                if i & 1 == 0 { -h.x } else { h.x },
                if i & 2 == 0 { -h.y } else { h.y },
                if i & 4 == 0 { -h.z } else { h.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriMesh { vertices, faces }
}

/// Closed cylinder along z, centered at the origin.
pub fn cylinder(radius: f64, height: f64, segments: usize) -> TriMesh {
    let h = height / 2.0;
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for k in 0..segments {
        let a = 2.0 * PI * k as f64 / segments as f64;
        vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), -h));
        vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), h));
    }
    let bottom = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, -h));
    let top = vertices.len();
    vertices.push(Point3::new(0.0, 0.0, h));
    let mut faces = Vec::with_capacity(4 * segments);
    for k in 0..segments {
        let (b0, t0) = (2 * k, 2 * k + 1);
        let (b1, t1) = (2 * ((k + 1) % segments), 2 * ((k + 1) % segments) + 1);
        faces.push([b0, b1, t1]);
        faces.push([b0, t1, t0]);
        faces.push([bottom, b1, b0]);
        faces.push([top, t0, t1]);
    }
    TriMesh { vertices, faces }
}

/// Torus around the z axis with the given major/minor radii.
pub fn torus(major: f64, minor: f64, major_segments: usize, minor_segments: usize) -> TriMesh {
    let mut vertices = Vec::with_capacity(major_segments * minor_segments);
    for i in 0..major_segments {
        let u = 2.0 * PI * i as f64 / major_segments as f64;
        for j in 0..minor_segments {
            let v = 2.0 * PI * j as f64 / minor_segments as f64;
            let r = major + minor * v.cos();
            vertices.push(Point3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % major_segments) * minor_segments + (j % minor_segments);
    let mut faces = Vec::with_capacity(2 * major_segments * minor_segments);
    for i in 0..major_segments {
        for j in 0..minor_segments {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    TriMesh { vertices, faces }
}

/// A mug-like object: a cylindrical body with a torus handle on the +x side,
/// handle plane xz. The two parts are not welded.
pub fn mug(radius: f64, height: f64) -> TriMesh {
    let body = cylinder(radius, height, 32);
    let major = 0.3 * height;
    let minor = 0.07 * height;
    let mut handle = torus(major, minor, 24, 10);
    // rotate the torus into the xz plane: (x, y, z) -> (x, z, -y)
    for v in &mut handle.vertices {
        *v = Point3::new(v.x, v.z, -v.y);
    }
    let handle = handle.translated(Vector3::new(radius + major - 1.5 * minor, 0.0, 0.0));
    body.merged(&handle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signed_volume(m: &TriMesh) -> f64 {
        m.faces
            .iter()
            .map(|&[a, b, c]| {
                m.vertices[a].coords.dot(&m.vertices[b].coords.cross(&m.vertices[c].coords)) / 6.0
            })
            .sum()
    }

    #[test]
    fn icosphere_vertex_count_and_radius() {
        let m = icosphere(0.3, 3);
        assert_eq!(m.vertices.len(), 642);
        assert_eq!(m.faces.len(), 1280);
        assert!(m.vertices.iter().all(|v| (v.coords.norm() - 0.3).abs() < 1e-12));
    }

    #[test]
    fn outward_winding_gives_positive_volume() {
        let bx = cuboid(Vector3::new(0.06, 0.06, 0.12));
        assert!((signed_volume(&bx) - 0.06 * 0.06 * 0.12).abs() < 1e-15);
        let cyl = cylinder(0.04, 0.12, 64);
        let exact = 0.5 * 64.0 * (2.0 * PI / 64.0).sin() * 0.04f64.powi(2) * 0.12;
        assert!((signed_volume(&cyl) - exact).abs() < 1e-12);
        assert!(signed_volume(&icosphere(1.0, 2)) > 0.0);
        assert!(signed_volume(&torus(0.1, 0.02, 32, 16)) > 0.0);
    }
}
