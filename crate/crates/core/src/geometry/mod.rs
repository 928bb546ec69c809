//! Object geometry: triangle meshes, oriented surface samples, bounding boxes
//! and nearest-surface-point queries.

mod aabb;
mod io;
mod kdtree;
mod mesh;
pub mod primitives;
mod sampling;

pub use aabb::{compute_aabb, Aabb};
pub use io::{load_mesh, parse_mesh, to_obj, to_off, LoadOptions, MeshFormat};
pub use kdtree::{nearest_linear, nearest_surface_point, NearestHit, SurfaceKdTree};
pub use mesh::{triangle_area, TriMesh, MIN_FACE_AREA};
pub use sampling::{mesh_fingerprint, sample_surface, SurfaceSamples};

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot infer mesh format of {0} (expected .off or .obj)")]
    UnknownFormat(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index}, but the mesh has {vertex_count} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertex_count: usize },
    #[error("face {face} is degenerate (area {area:e} m²)")]
    DegenerateFace { face: usize, area: f64 },
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("mesh has no faces")]
    EmptyMesh,
    #[error("requested {requested} samples, need at least {minimum}")]
    TooFewSamples { requested: usize, minimum: usize },
}
