//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{Matrix3, Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use graspbo::hand::{Contact, LinkKind};

pub fn contact(p: Vector3<f64>, outward: Vector3<f64>, tangent: Option<Vector3<f64>>) -> Contact {
    Contact {
        point: Point3::from(p),
        normal: outward.normalize(),
        link: LinkKind::Distal,
        finger: Some(0),
        value: 0.0,
        tangent,
    }
}

/// Exact 3-D hull metrics by enumerating point triples. Requires points in
/// general position (no four coplanar on the hull).
pub fn brute_force_hull3(points: &[[f64; 3]]) -> (f64, f64) {
    let n = points.len();
    let v: Vec<Vector3<f64>> = points.iter().map(|p| Vector3::from(*p)).collect();
    let centroid = v.iter().sum::<Vector3<f64>>() / n as f64;
    let mut min_offset = f64::INFINITY;
    let mut origin_inside = true;
    let mut volume = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut normal = (v[j] - v[i]).cross(&(v[k] - v[i]));
                if normal.norm() < 1e-14 {
                    continue;
                }
                normal.normalize_mut();
                let mut offset = normal.dot(&v[i]);
                if normal.dot(&centroid) > offset {
                    normal = -normal;
                    offset = -offset;
                }
                if v.iter().all(|p| normal.dot(p) - offset <= 1e-12) {
                    min_offset = min_offset.min(offset);
                    origin_inside &= offset > 1e-12;
                    let m = Matrix3::from_columns(&[v[i] - centroid, v[j] - centroid, v[k] - centroid]);
                    volume += m.determinant().abs() / 6.0;
                }
            }
        }
    }
    (if origin_inside { min_offset } else { 0.0 }, volume)
}

fn support(points: &[Vec<f64>], u: &[f64]) -> f64 {
    points
        .iter()
        .map(|p| p.iter().zip(u).map(|(a, b)| a * b).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

const STARTS: usize = 24;

/// min over unit directions of the support function max_i u·w_i: sampled
/// directions, smoothed descent from the best few, and facet normals found
/// by ray shooting.
pub fn support_min(points: &[Vec<f64>], n_dirs: usize, seed: u64) -> f64 {
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..n_dirs {
        let u = random_unit(&mut rng, dim);
        let h = support(points, &u);
        best.push((h, u));
        if best.len() > 512 {
            best.sort_by(|a, b| a.0.total_cmp(&b.0));
            best.truncate(STARTS);
        }
    }
    best.sort_by(|a, b| a.0.total_cmp(&b.0));
    best.truncate(STARTS);
    let mut overall = f64::INFINITY;
    for (h0, u0) in best {
        let u = smoothed_descent(points, u0);
        overall = overall.min(h0).min(support(points, &u)).min(polish(points, &u));
    }
    for _ in 0..RAYS {
        let u = random_unit(&mut rng, dim);
        if let Some(n) = ray_facet_normal(points, &u) {
            overall = overall.min(support(points, &n));
        }
    }
    overall
}

const RAYS: usize = 400;

/// Normal of the hull facet hit by the ray along `u`: the maximiser of
/// `u·y` over the polar set `{y : w_i·y ≤ 1}`, normalised.
fn ray_facet_normal(points: &[Vec<f64>], u: &[f64]) -> Option<Vec<f64>> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = u.iter().map(|&c| lp.add_var(c, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for p in points {
        let expr: Vec<_> = vars.iter().zip(p).map(|(v, c)| (*v, *c)).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
    }
    let sol = lp.solve().ok()?;
    let y: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();
    let len = norm(&y);
    (len > 0.0).then(|| y.into_iter().map(|x| x / len).collect())
}

/// Tries the hyperplane normals through every `dim`-subset of the points
/// nearest to the supporting plane at `u`.
fn polish(points: &[Vec<f64>], u: &[f64]) -> f64 {
    let dim = u.len();
    let mut order: Vec<(f64, usize)> =
        points.iter().enumerate().map(|(i, p)| (-p.iter().zip(u).map(|(a, b)| a * b).sum::<f64>(), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let top: Vec<&Vec<f64>> = order.iter().take(dim + 2).map(|&(_, i)| &points[i]).collect();
    let mut best = f64::INFINITY;
    let k = top.len();
    for mask in 0u32..(1 << k) {
        if mask.count_ones() as usize != dim {
            continue;
        }
        let subset: Vec<&Vec<f64>> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| top[i]).collect();
        if let Some(mut n) = hyperplane_normal(&subset) {
            if n.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
                n.iter_mut().for_each(|x| *x = -*x);
            }
            best = best.min(support(points, &n));
        }
    }
    best
}

/// Unit normal of the hyperplane through `dim` points, by cofactors.
fn hyperplane_normal(pts: &[&Vec<f64>]) -> Option<Vec<f64>> {
    let dim = pts[0].len();
    let base = pts[0];
    let rows: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    let normal: Vec<f64> = (0..dim)
        .map(|k| {
            let m = nalgebra::DMatrix::from_fn(dim - 1, dim - 1, |r, c| rows[r][if c < k { c } else { c + 1 }]);
            if k % 2 == 0 { m.determinant() } else { -m.determinant() }
        })
        .collect();
    let len = norm(&normal);
    (len > 1e-14).then(|| normal.into_iter().map(|x| x / len).collect())
}

/// Projected gradient descent on the sphere over `T·log Σ exp(w·u / T)`,
/// annealing `T` towards zero.
fn smoothed_descent(points: &[Vec<f64>], mut u: Vec<f64>) -> Vec<f64> {
    let scale = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
    let mut temp = 0.05 * scale;
    while temp > 1e-7 * scale {
        let mut step = 0.1;
        for _ in 0..200 {
            let (f, g) = lse(points, &u, temp);
            let gn: Vec<f64> = {
                let radial: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
                g.iter().zip(&u).map(|(a, b)| a - radial * b).collect()
            };
            if norm(&gn) < 1e-14 {
                break;
            }
            let mut accepted = false;
            while step > 1e-14 {
                let cand = normalized(u.iter().zip(&gn).map(|(a, b)| a - step * b).collect());
                if lse(points, &cand, temp).0 < f {
                    u = cand;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        temp *= 0.5;
    }
    u
}

fn lse(points: &[Vec<f64>], u: &[f64], temp: f64) -> (f64, Vec<f64>) {
    let dots: Vec<f64> = points.iter().map(|p| p.iter().zip(u).map(|(a, b)| a * b).sum()).collect();
    let m = dots.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = dots.iter().map(|d| ((d - m) / temp).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut g = vec![0.0; u.len()];
    for (w, p) in weights.iter().zip(points) {
        for (gk, pk) in g.iter_mut().zip(p) {
            *gk += w / total * pk;
        }
    }
    (m + temp * total.ln(), g)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// LP feasibility of 0 = Σ λᵢ wᵢ, Σ λᵢ = 1, λ ≥ 0.
pub fn origin_in_hull_lp(points: &[Vec<f64>]) -> bool {
    let dim = points[0].len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for k in 0..dim {
        let expr: Vec<_> = vars.iter().zip(points).map(|(v, p)| (*v, p[k])).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let ones: Vec<_> = vars.iter().map(|v| (*v, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    lp.solve().is_ok()
}

/// Random contacts on an ellipsoid with outward normals and link-like
/// tangent hints.
pub fn random_contacts(rng: &mut ChaCha8Rng, count: usize) -> Vec<Contact> {
    let axes = Vector3::new(rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
    (0..count)
        .map(|_| {
            let d = Vector3::from_fn(|_, _| StandardNormal.sample(rng)).normalize();
            let p = d.component_mul(&axes);
            let n = d.component_div(&axes).normalize();
            let t = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
            contact(p, n, Some(t))
        })
        .collect()
}

/// Exact origin margin by enumerating every `dim`-subset and keeping the
/// supporting hyperplanes. Normals come from cofactor expansion.
pub fn brute_force_margin(points: &[Vec<f64>]) -> f64 {
    let dim = points[0].len();
    let n = points.len();
    let centroid: Vec<f64> = (0..dim).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
    let scale = points.iter().map(|p| norm(p)).fold(0.0, f64::max);
    let tol = 1e-9 * scale;
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let base = &points[idx[0]];
        let subset: Vec<&Vec<f64>> = idx.iter().map(|&i| &points[i]).collect();
        if let Some(normal) = hyperplane_normal(&subset) {
            let dot = |p: &[f64]| p.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>();
            let mut offset = dot(base);
            let mut sign = 1.0;
            if dot(&centroid) > offset {
                sign = -1.0;
                offset = -offset;
            }
            if points.iter().all(|p| sign * dot(p) <= offset + tol) {
                best = best.min(offset);
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return best.max(0.0);
            }
            i -= 1;
            if idx[i] < n - dim + i {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
