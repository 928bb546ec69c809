//! Gaussian process implicit surface (GPIS) and tangent-space charts.
//!
//! The implicit function is negative inside the object, zero on the surface
//! and positive outside. Training uses the surface samples (target 0) plus
//! copies pushed ±δ along the normals (targets ±δ). The prior mean is a
//! scaled radial distance to an axis-aligned ellipsoid fitted to the samples'
//! bounding box (a sphere through the mean radius for round objects), so far
//! from the object the function grows like a distance instead of decaying to
//! zero.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix3, Matrix3x2, Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{Aabb, SurfaceSamples};
use crate::surrogate::{matern52, matern52_grad_factor, KernelParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GpisError {
    #[error("need at least {minimum} surface samples, got {got}")]
    TooFewSamples { got: usize, minimum: usize },
    #[error("offset must be positive, got {0}")]
    InvalidOffset(f64),
    #[error("GPIS kernel matrix stayed singular up to jitter {jitter:e}")]
    SingularKernel { jitter: f64 },
    #[error("gradient vanishes at {point:?} (|∇f| = {norm:e})")]
    VanishingGradient { point: [f64; 3], norm: f64 },
    #[error("point is {value:e} away from the zero level set (tolerance {tolerance:e})")]
    OffSurface { value: f64, tolerance: f64 },
    #[error("chart coordinate |u| = {norm} exceeds chart radius {radius}")]
    OutOfChart { norm: f64, radius: f64 },
    #[error("prior ellipsoid axes must be positive, got {0:?}")]
    InvalidPrior([f64; 3]),
}

/// Fit settings. All lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpisConfig {
    /// Normal offset δ for the ±δ training copies.
    pub offset: f64,
    /// Matérn 5/2 length-scale.
    pub length: f64,
    /// Matérn 5/2 signal standard deviation.
    pub sigma: f64,
    /// Initial diagonal jitter, relative to σ².
    pub jitter: f64,
    /// At most this many surface samples enter the fit.
    pub max_surface_points: usize,
}

impl GpisConfig {
    /// Defaults scaled to the object: δ = 0.1·diag, ρ = 0.1·diag, σ = 0.1·diag.
    pub fn for_aabb(aabb: &Aabb) -> Self {
        let diag = aabb.diagonal();
        Self {
            offset: 0.1 * diag,
            length: 0.1 * diag,
            sigma: 0.1 * diag,
            jitter: 1e-10,
            max_surface_points: 400,
        }
    }
}

/// Serializable form of a fitted model; the factorization is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpisDocument {
    pub inputs: Vec<[f64; 3]>,
    pub targets: Vec<f64>,
    pub sigma: f64,
    pub length: f64,
    pub jitter: f64,
    pub offset: f64,
    pub prior_center: [f64; 3],
    pub prior_axes: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct GpisModel {
    inputs: Vec<Point3<f64>>,
    targets: Vec<f64>,
    kernel: KernelParams,
    jitter: f64,
    offset: f64,
    prior_center: Point3<f64>,
    prior_axes: Vector3<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GpisModel {
    pub fn fit(samples: &SurfaceSamples, cfg: &GpisConfig) -> Result<Self, GpisError> {
        let samples = samples.thinned(cfg.max_surface_points);
        if samples.len() < 4 {
            return Err(GpisError::TooFewSamples { got: samples.len(), minimum: 4 });
        }
        if !(cfg.offset > 0.0 && cfg.offset.is_finite()) {
            return Err(GpisError::InvalidOffset(cfg.offset));
        }
        let n = samples.len();
        let mut inputs = Vec::with_capacity(3 * n);
        let mut targets = Vec::with_capacity(3 * n);
        inputs.extend_from_slice(&samples.points);
        targets.extend(std::iter::repeat(0.0).take(n));
        for (sign, target) in [(1.0, cfg.offset), (-1.0, -cfg.offset)] {
            for (p, nrm) in samples.points.iter().zip(&samples.normals) {
                inputs.push(p + nrm * (sign * cfg.offset));
                targets.push(target);
            }
        }
        let (center, axes) = prior_ellipsoid(&samples.points);
        Self::assemble(inputs, targets, cfg.sigma, cfg.length, cfg.jitter, cfg.offset, center, axes)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        inputs: Vec<Point3<f64>>,
        targets: Vec<f64>,
        sigma: f64,
        length: f64,
        jitter_rel: f64,
        offset: f64,
        prior_center: Point3<f64>,
        prior_axes: Vector3<f64>,
    ) -> Result<Self, GpisError> {
        if !prior_axes.iter().all(|a| *a > 0.0 && a.is_finite()) {
            return Err(GpisError::InvalidPrior([prior_axes.x, prior_axes.y, prior_axes.z]));
        }
        let kernel = KernelParams::new(sigma, length, 0.0);
        let m = inputs.len();
        let gram = DMatrix::from_fn(m, m, |i, j| matern52((inputs[i] - inputs[j]).norm(), &kernel));
        let s2 = sigma * sigma;
        let mut jitter = jitter_rel.max(1e-14);
        let chol = loop {
            let mut k = gram.clone();
            for i in 0..m {
                k[(i, i)] += jitter * s2;
            }
            if let Some(c) = Cholesky::new(k) {
                break c;
            }
            jitter *= 10.0;
            if jitter > 1e-2 {
                return Err(GpisError::SingularKernel { jitter: jitter * s2 });
            }
        };
        let residual = DVector::from_iterator(
            m,
            inputs.iter().zip(&targets).map(|(x, y)| {
                y - ellipsoid_prior(&prior_center, &prior_axes, x).0
            }),
        );
        let alpha = chol.solve(&residual);
        Ok(Self {
            inputs,
            targets,
            kernel,
            jitter,
            offset,
            prior_center,
            prior_axes,
            chol,
            alpha,
        })
    }

    pub fn from_document(doc: &GpisDocument) -> Result<Self, GpisError> {
        Self::assemble(
            doc.inputs.iter().map(|p| Point3::from(*p)).collect(),
            doc.targets.clone(),
            doc.sigma,
            doc.length,
            doc.jitter,
            doc.offset,
            Point3::from(doc.prior_center),
            Vector3::from(doc.prior_axes),
        )
    }

    pub fn to_document(&self) -> GpisDocument {
        GpisDocument {
            inputs: self.inputs.iter().map(|p| [p.x, p.y, p.z]).collect(),
            targets: self.targets.clone(),
            sigma: self.kernel.sigma,
            length: self.kernel.length,
            jitter: self.jitter,
            offset: self.offset,
            prior_center: [self.prior_center.x, self.prior_center.y, self.prior_center.z],
            prior_axes: [self.prior_axes.x, self.prior_axes.y, self.prior_axes.z],
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn training_len(&self) -> usize {
        self.inputs.len()
    }

    /// Surface training points (target 0).
    pub fn surface_inputs(&self) -> impl Iterator<Item = &Point3<f64>> {
        self.inputs.iter().zip(&self.targets).filter(|(_, t)| **t == 0.0).map(|(p, _)| p)
    }

    fn prior(&self, x: &Point3<f64>) -> (f64, Vector3<f64>) {
        ellipsoid_prior(&self.prior_center, &self.prior_axes, x)
    }

    /// Implicit function value only.
    pub fn value(&self, x: &Point3<f64>) -> f64 {
        let mut f = self.prior(x).0;
        for (xi, a) in self.inputs.iter().zip(self.alpha.iter()) {
            f += a * matern52((x - xi).norm(), &self.kernel);
        }
        f
    }

    /// Value and analytic gradient at `x`.
    pub fn query(&self, x: &Point3<f64>) -> (f64, Vector3<f64>) {
        let (mut f, mut g) = self.prior(x);
        for (xi, a) in self.inputs.iter().zip(self.alpha.iter()) {
            let diff = x - xi;
            let d = diff.norm();
            f += a * matern52(d, &self.kernel);
            g += diff * (a * matern52_grad_factor(d, &self.kernel));
        }
        (f, g)
    }

    /// Largest |f| over the surface training points.
    pub fn max_surface_residual(&self) -> f64 {
        self.surface_inputs().map(|p| self.value(p).abs()).fold(0.0, f64::max)
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.chol
    }
}

/// Center and semi-axes of the prior ellipsoid: the samples' bounding box,
/// rescaled so the samples lie on it on average.
fn prior_ellipsoid(points: &[Point3<f64>]) -> (Point3<f64>, Vector3<f64>) {
    let lo = points.iter().fold(Vector3::repeat(f64::INFINITY), |m, p| m.inf(&p.coords));
    let hi = points.iter().fold(Vector3::repeat(f64::NEG_INFINITY), |m, p| m.sup(&p.coords));
    let center = Point3::from((lo + hi) / 2.0);
    let half = (hi - lo) / 2.0;
    let half = half.map(|h| h.max(1e-3 * half.max()));
    let mean = points.iter().map(|p| (p - center).component_div(&half).norm()).sum::<f64>() / points.len() as f64;
    (center, half * mean)
}

/// `s·(‖D⁻¹(x − c)‖ − 1)` with `s` the geometric mean of the semi-axes `D`;
/// equals the signed distance when the ellipsoid is a sphere.
fn ellipsoid_prior(center: &Point3<f64>, axes: &Vector3<f64>, x: &Point3<f64>) -> (f64, Vector3<f64>) {
    let s = (axes.x * axes.y * axes.z).cbrt();
    let u = (x - center).component_div(axes);
    let r = u.norm();
    let grad = if r > 0.0 { u.component_div(axes) * (s / r) } else { Vector3::zeros() };
    (s * (r - 1.0), grad)
}

pub fn fit_gpis(samples: &SurfaceSamples, cfg: &GpisConfig) -> Result<GpisModel, GpisError> {
    GpisModel::fit(samples, cfg)
}

/// Local tangent-plane parameterization x' = center + Φu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub center: Point3<f64>,
    /// Orthonormal tangent basis, columns ⟂ normal.
    pub basis: Matrix3x2<f64>,
    /// Outward unit normal ∇f/|∇f| at the center.
    pub normal: Vector3<f64>,
    pub radius: f64,
}

/// Deterministic orthonormal basis of the plane orthogonal to `n` from the
/// Householder reflection that maps the dominant axis of `n` onto ∓n.
pub fn householder_tangent_basis(n: &Vector3<f64>) -> Matrix3x2<f64> {
    let n = n.normalize();
    let k = n.iamax();
    let sign = if n[k] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = n;
    v[k] += sign;
    let h = Matrix3::identity() - v * v.transpose() * (2.0 / v.norm_squared());
    let cols: Vec<usize> = (0..3).filter(|&j| j != k).collect();
    Matrix3x2::from_columns(&[h.column(cols[0]).into_owned(), h.column(cols[1]).into_owned()])
}

/// Builds the chart at a surface point. `surface_tol` bounds |f(x_surface)|.
pub fn make_chart(
    model: &GpisModel,
    x_surface: &Point3<f64>,
    radius: f64,
    surface_tol: f64,
) -> Result<Chart, GpisError> {
    let (f, g) = model.query(x_surface);
    if f.abs() > surface_tol {
        return Err(GpisError::OffSurface { value: f, tolerance: surface_tol });
    }
    chart_from_gradient(x_surface, &g, radius)
}

/// Chart at `center` from a precomputed gradient; `center` need not lie on the surface.
pub fn chart_from_gradient(
    center: &Point3<f64>,
    gradient: &Vector3<f64>,
    radius: f64,
) -> Result<Chart, GpisError> {
    let norm = gradient.norm();
    if !(norm > 1e-8) {
        return Err(GpisError::VanishingGradient { point: [center.x, center.y, center.z], norm });
    }
    let normal = gradient / norm;
    Ok(Chart { center: *center, basis: householder_tangent_basis(&normal), normal, radius })
}

/// Point on the chart's tangent plane; not reprojected onto the surface.
pub fn chart_point(chart: &Chart, u: &Vector2<f64>) -> Result<Point3<f64>, GpisError> {
    let norm = u.norm();
    if norm > chart.radius * (1.0 + 1e-12) {
        return Err(GpisError::OutOfChart { norm, radius: chart.radius });
    }
    Ok(chart.center + chart.basis * u)
}
