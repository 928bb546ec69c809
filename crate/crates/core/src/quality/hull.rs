//! Dimension-generic incremental convex hull (beneath-beyond with outside
//! sets). Facets are simplices carrying neighbor links; every facet normal is
//! oriented away from a fixed interior point.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HullError {
    #[error("{points} points do not span {dim} dimensions (affine rank {rank})")]
    Degenerate { points: usize, dim: usize, rank: usize },
    #[error("hull construction lost consistency")]
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullFacet {
    /// Indices into the input points.
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    /// `normal · x = offset` on the facet.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexHull {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub facets: Vec<HullFacet>,
    pub interior: Vec<f64>,
    /// Absolute tolerance used for visibility tests.
    pub eps: f64,
}

struct Facet {
    vertices: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    /// `neighbors[k]` shares every vertex except `vertices[k]`.
    neighbors: Vec<usize>,
    outside: Vec<usize>,
    alive: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Removes the components of `v` along the orthonormal `basis` (twice, for
/// stability).
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

fn affine_rank(points: &[Vec<f64>], dim: usize) -> usize {
    let n = points.len();
    if n == 0 {
        return 0;
    }
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x / n as f64);
    }
    let m = DMatrix::from_fn(n.max(dim), dim, |i, j| if i < n { points[i][j] - mean[j] } else { 0.0 });
    let sv = m.singular_values();
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > 1e-10 * smax).count()
}

struct Builder<'a> {
    dim: usize,
    pts: &'a [Vec<f64>],
    interior: Vec<f64>,
    eps: f64,
    facets: Vec<Facet>,
}

impl<'a> Builder<'a> {
    fn plane(&self, vertices: &[usize]) -> Option<(Vec<f64>, f64)> {
        let v0 = &self.pts[vertices[0]];
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(self.dim - 1);
        for &vi in &vertices[1..] {
            let mut e = sub(&self.pts[vi], v0);
            project_out(&mut e, &basis);
            let len = norm(&e);
            if len <= 1e-14 * (1.0 + norm(v0)) {
                return None;
            }
            e.iter_mut().for_each(|x| *x /= len);
            basis.push(e);
        }
        let mut n = sub(v0, &self.interior);
        project_out(&mut n, &basis);
        let len = norm(&n);
        if len <= 1e-14 {
            return None;
        }
        n.iter_mut().for_each(|x| *x /= len);
        let offset = dot(&n, v0);
        Some((n, offset))
    }

    fn distance(&self, f: usize, p: usize) -> f64 {
        let fc = &self.facets[f];
        dot(&fc.normal, &self.pts[p]) - fc.offset
    }

    fn initial_simplex(&self) -> Option<Vec<usize>> {
        let n = self.pts.len();
        let mut mean = vec![0.0; self.dim];
        for p in self.pts {
            mean.iter_mut().zip(p).for_each(|(m, x)| *m += x / n as f64);
        }
        let first = (0..n)
            .max_by(|&a, &b| {
                norm(&sub(&self.pts[a], &mean))
                    .total_cmp(&norm(&sub(&self.pts[b], &mean)))
                    .then(b.cmp(&a))
            })
            .unwrap();
        let mut chosen = vec![first];
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for _ in 0..self.dim {
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for i in 0..n {
                let mut r = sub(&self.pts[i], &self.pts[first]);
                project_out(&mut r, &basis);
                let len = norm(&r);
                if best.as_ref().is_none_or(|(bl, _, _)| len > *bl) {
                    best = Some((len, i, r));
                }
            }
            let (len, i, mut r) = best?;
            if len <= self.eps {
                return None;
            }
            r.iter_mut().for_each(|x| *x /= len);
            basis.push(r);
            chosen.push(i);
        }
        Some(chosen)
    }

    fn build(mut self) -> Result<ConvexHull, HullError> {
        let d = self.dim;
        let simplex = self.initial_simplex().ok_or(HullError::Inconsistent)?;
        self.interior = vec![0.0; d];
        for &s in &simplex {
            for (c, x) in self.interior.iter_mut().zip(&self.pts[s]) {
                *c += x / (d + 1) as f64;
            }
        }
        for j in 0..=d {
            let vertices: Vec<usize> = simplex.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect();
            let neighbors: Vec<usize> = (0..=d).filter(|&k| k != j).collect();
            let (normal, offset) = self.plane(&vertices).ok_or(HullError::Inconsistent)?;
            self.facets.push(Facet { vertices, normal, offset, neighbors, outside: Vec::new(), alive: true });
        }
        let in_simplex = |i: usize| simplex.contains(&i);
        for i in 0..self.pts.len() {
            if in_simplex(i) {
                continue;
            }
            if let Some(f) = (0..=d).find(|&f| self.distance(f, i) > self.eps) {
                self.facets[f].outside.push(i);
            }
        }

        let mut stack: Vec<usize> = (0..=d).rev().collect();
        let mut visited_mark: Vec<usize> = Vec::new();
        let mut epoch = 0usize;
        while let Some(f) = stack.pop() {
            if !self.facets[f].alive || self.facets[f].outside.is_empty() {
                continue;
            }
            epoch += 1;
            let apex = *self.facets[f]
                .outside
                .iter()
                .max_by(|&&a, &&b| self.distance(f, a).total_cmp(&self.distance(f, b)).then(b.cmp(&a)))
                .unwrap();

            visited_mark.resize(self.facets.len(), 0);
            let mut visible = vec![f];
            visited_mark[f] = epoch;
            let mut horizon: Vec<(usize, usize)> = Vec::new();
            let mut head = 0;
            while head < visible.len() {
                let v = visible[head];
                head += 1;
                for slot in 0..d {
                    let g = self.facets[v].neighbors[slot];
                    if visited_mark[g] == epoch {
                        continue;
                    }
                    if self.distance(g, apex) > self.eps {
                        visited_mark[g] = epoch;
                        visible.push(g);
                    } else {
                        horizon.push((v, slot));
                    }
                }
            }
            let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
            let mut created = Vec::with_capacity(horizon.len());
            for &(v, slot) in &horizon {
                let mut vertices = self.facets[v].vertices.clone();
                vertices[slot] = apex;
                let (normal, offset) = self.plane(&vertices).ok_or(HullError::Inconsistent)?;
                let outer = self.facets[v].neighbors[slot];
                let id = self.facets.len();
                let mut neighbors = vec![usize::MAX; d];
                neighbors[slot] = outer;
                let back = self.facets[outer]
                    .neighbors
                    .iter()
                    .position(|&x| x == v)
                    .ok_or(HullError::Inconsistent)?;
                self.facets[outer].neighbors[back] = id;
                for k in 0..d {
                    if k == slot {
                        continue;
                    }
                    let mut key: Vec<usize> =
                        vertices.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, x)| *x).collect();
                    key.sort_unstable();
                    if let Some((other, other_slot)) = ridge_map.remove(&key) {
                        neighbors[k] = other;
                        self.facets[other].neighbors[other_slot] = id;
                    } else {
                        ridge_map.insert(key, (id, k));
                    }
                }
                self.facets.push(Facet { vertices, normal, offset, neighbors, outside: Vec::new(), alive: true });
                created.push(id);
            }
            if !ridge_map.is_empty() {
                return Err(HullError::Inconsistent);
            }

            let mut orphans = Vec::new();
            for &v in &visible {
                self.facets[v].alive = false;
                orphans.append(&mut self.facets[v].outside);
            }
            for p in orphans {
                if p == apex {
                    continue;
                }
                if let Some(&nf) = created.iter().find(|&&nf| self.distance(nf, p) > self.eps) {
                    self.facets[nf].outside.push(p);
                }
            }
            stack.extend(created.iter().rev());
        }

        let alive: Vec<&Facet> = self.facets.iter().filter(|f| f.alive).collect();
        for f in &alive {
            if f.neighbors.iter().any(|&g| g == usize::MAX || !self.facets[g].alive) {
                return Err(HullError::Inconsistent);
            }
        }
        let facets = alive
            .into_iter()
            .map(|f| HullFacet { vertices: f.vertices.clone(), normal: f.normal.clone(), offset: f.offset })
            .collect();
        Ok(ConvexHull { dim: d, points: self.pts.to_vec(), facets, interior: self.interior, eps: self.eps })
    }
}

/// Convex hull of `points` (each of length `dim`). Points must affinely span
/// the full dimension.
pub fn convex_hull(points: &[Vec<f64>], dim: usize) -> Result<ConvexHull, HullError> {
    assert!(dim >= 2, "hull dimension must be at least 2");
    assert!(points.iter().all(|p| p.len() == dim), "point dimension mismatch");
    let rank = affine_rank(points, dim);
    if points.len() < dim + 1 || rank < dim {
        return Err(HullError::Degenerate { points: points.len(), dim, rank });
    }
    let scale = points.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let eps = 1e-10 * scale;
    let attempt = |pts: &[Vec<f64>]| {
        Builder { dim, pts, interior: Vec::new(), eps, facets: Vec::new() }.build()
    };
    match attempt(points) {
        Ok(h) => Ok(h),
        Err(_) => {
            // joggle once and retry
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            let jittered: Vec<Vec<f64>> = points
                .iter()
                .map(|p| p.iter().map(|x| x + scale * 1e-9 * rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let mut h = attempt(&jittered)?;
            h.points = points.to_vec();
            Ok(h)
        }
    }
}

impl ConvexHull {
    /// True when the origin lies strictly inside (beyond tolerance).
    pub fn contains_origin_strictly(&self) -> bool {
        self.facets.iter().all(|f| f.offset > self.eps)
    }

    /// Smallest distance from the origin to a facet hyperplane when the
    /// origin is strictly inside, else 0.
    pub fn origin_margin(&self) -> f64 {
        if !self.contains_origin_strictly() {
            return 0.0;
        }
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }

    /// Sum of the simplex volumes spanned by each facet and the interior point.
    pub fn volume(&self) -> f64 {
        let d = self.dim;
        let factorial: f64 = (1..=d).map(|k| k as f64).product();
        self.facets
            .iter()
            .map(|f| {
                let m = DMatrix::from_fn(d, d, |i, j| self.points[f.vertices[i]][j] - self.interior[j]);
                m.determinant().abs() / factorial
            })
            .sum()
    }

    /// Max over hull vertices of `u · x`.
    pub fn support(&self, u: &[f64]) -> f64 {
        self.points.iter().map(|p| dot(p, u)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn facet_normal(&self, k: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.facets[k].normal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(dim: usize, half: f64) -> Vec<Vec<f64>> {
        (0..1usize << dim)
            .map(|m| (0..dim).map(|k| if m >> k & 1 == 1 { half } else { -half }).collect())
            .collect()
    }

    #[test]
    fn cubes_in_several_dimensions() {
        for dim in 2..=6 {
            let mut pts = cube(dim, 0.5);
            pts.push(vec![0.1; dim]); // interior point
            let h = convex_hull(&pts, dim).unwrap();
            assert!((h.volume() - 1.0).abs() < 1e-9, "dim {dim}: {}", h.volume());
            assert!((h.origin_margin() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cross_polytope_margin() {
        for dim in 3..=6 {
            let mut pts = Vec::new();
            for k in 0..dim {
                for s in [1.0, -1.0] {
                    let mut p = vec![0.0; dim];
                    p[k] = s;
                    pts.push(p);
                }
            }
            let h = convex_hull(&pts, dim).unwrap();
            assert!((h.origin_margin() - 1.0 / (dim as f64).sqrt()).abs() < 1e-12);
            let fact: f64 = (1..=dim).map(|k| k as f64).product();
            assert!((h.volume() - 2f64.powi(dim as i32) / fact).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let pts = vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert!(matches!(convex_hull(&pts, 3), Err(HullError::Degenerate { rank: 2, .. })));
        assert!(matches!(convex_hull(&pts[..3], 3), Err(HullError::Degenerate { .. })));
    }

    #[test]
    fn origin_outside_gives_zero_margin() {
        let pts: Vec<Vec<f64>> = cube(3, 0.5).into_iter().map(|p| vec![p[0] + 2.0, p[1], p[2]]).collect();
        let h = convex_hull(&pts, 3).unwrap();
        assert_eq!(h.origin_margin(), 0.0);
        assert!((h.volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_clouds_have_consistent_facets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [3, 4, 6] {
            let pts: Vec<Vec<f64>> = (0..40).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let h = convex_hull(&pts, dim).unwrap();
            for f in &h.facets {
                for p in &pts {
                    assert!(dot(&f.normal, p) - f.offset <= 1e-9);
                }
                assert!((h.support(&f.normal) - f.offset).abs() < 1e-9);
            }
        }
    }
}
