use nalgebra::{Point3, Vector3};

use super::SurfaceSamples;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Balanced kD-tree over surface samples for exact nearest-point queries.
///
/// Ties in distance resolve to the lowest sample index, so results match a
/// linear scan exactly.
#[derive(Debug, Clone)]
pub struct SurfaceKdTree {
    samples: SurfaceSamples,
    order: Vec<usize>,
    nodes: Vec<Node>,
    leaf_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestHit {
    pub index: usize,
    pub point: Point3<f64>,
    pub normal: Vector3<f64>,
    pub distance: f64,
}

impl SurfaceKdTree {
    pub const DEFAULT_LEAF_SIZE: usize = 8;

    pub fn new(samples: SurfaceSamples, leaf_size: usize) -> Self {
        assert!(!samples.is_empty(), "kD-tree needs at least one sample");
        let mut tree = Self {
            order: (0..samples.len()).collect(),
            samples,
            nodes: Vec::new(),
            leaf_size: leaf_size.max(1),
        };
        let n = tree.order.len();
        tree.build(0, n);
        tree
    }

    pub fn samples(&self) -> &SurfaceSamples {
        &self.samples
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= self.leaf_size {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let pts = &self.samples.points;
        let slice = &self.order[start..end];
        let axis = (0..3)
            .max_by(|&a, &b| {
                let spread = |ax: usize| {
                    let (lo, hi) = slice
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            (lo.min(pts[i][ax]), hi.max(pts[i][ax]))
                        });
                    hi - lo
                };
                spread(a).total_cmp(&spread(b))
            })
            .unwrap();
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
        });
        let value = pts[self.order[mid]][axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 }); // placeholder
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// Nearest stored sample to `query`.
    pub fn nearest(&self, query: &Point3<f64>) -> NearestHit {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(0, query, &mut best);
        let (d2, index) = best;
        NearestHit {
            index,
            point: self.samples.points[index],
            normal: self.samples.normals[index],
            distance: d2.sqrt(),
        }
    }

    fn search(&self, node: usize, q: &Point3<f64>, best: &mut (f64, usize)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let d2 = (self.samples.points[i] - q).norm_squared();
                    if d2 < best.0 || (d2 == best.0 && i < best.1) {
                        *best = (d2, i);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // equal distances must still be visited for the index tie rule
                if diff * diff <= best.0 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Linear-scan reference used by tests and small inputs.
pub fn nearest_linear(samples: &SurfaceSamples, query: &Point3<f64>) -> (usize, f64) {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in samples.points.iter().enumerate() {
        let d2 = (p - query).norm_squared();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

/// Convenience wrapper matching the free-function style of the other queries.
pub fn nearest_surface_point(tree: &SurfaceKdTree, query: &Point3<f64>) -> NearestHit {
    tree.nearest(query)
}
