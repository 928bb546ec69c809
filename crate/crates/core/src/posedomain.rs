//! Palm-pose search space.
//!
//! A palm pose is `x_palm = [t, φ, ψ, θ]`: a translation plus hyperspherical
//! coordinates of the unit quaternion. Translations are drawn from the shell
//! between two concentric ellipsoids fitted to an inner and an outer box.

use std::f64::consts::{PI, TAU};

use nalgebra::{Isometry3, Point3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;
use crate::gpis::Chart;
use crate::surrogate::{quaternion_angle, Metric};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoseError {
    #[error("inner and outer boxes are not concentric (offset {offset:e})")]
    CenterMismatch { offset: f64 },
    #[error("inner box is not contained in the outer box")]
    NotNested,
    #[error("box has a zero extent along axis {axis}")]
    FlatBox { axis: usize },
}

/// Maps hyperspherical angles to the unit quaternion
/// `(cos φ, sin φ cos ψ, sin φ sin ψ cos θ, sin φ sin ψ sin θ)`.
pub fn hyperspherical_to_quaternion(phi: f64, psi: f64, theta: f64) -> UnitQuaternion<f64> {
    let (sp, cp) = phi.sin_cos();
    let (ss, cs) = psi.sin_cos();
    let (st, ct) = theta.sin_cos();
    // components already have unit norm; new_unchecked keeps them verbatim
    UnitQuaternion::new_unchecked(Quaternion::new(cp, sp * cs, sp * ss * ct, sp * ss * st))
}

/// Inverse of [`hyperspherical_to_quaternion`] after canonicalizing w ≥ 0,
/// so φ ∈ [0, π/2], ψ ∈ [0, π], θ ∈ [0, 2π).
pub fn quaternion_to_hyperspherical(q: &UnitQuaternion<f64>) -> (f64, f64, f64) {
    let mut c = q.into_inner().coords;
    if c.w < 0.0 {
        c = -c;
    }
    let (w, x, y, z) = (c.w, c.x, c.y, c.z);
    let phi = (x * x + y * y + z * z).sqrt().atan2(w);
    let psi = (y * y + z * z).sqrt().atan2(x);
    let mut theta = z.atan2(y);
    if theta < 0.0 {
        theta += TAU;
    }
    if theta >= TAU {
        theta = 0.0;
    }
    (phi, psi, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PalmPose {
    pub t: Vector3<f64>,
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
}

impl PalmPose {
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        hyperspherical_to_quaternion(self.phi, self.psi, self.theta)
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.t), self.rotation())
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let (phi, psi, theta) = quaternion_to_hyperspherical(&iso.rotation);
        Self { t: iso.translation.vector, phi, psi, theta }
    }

    /// BO location `[t_x, t_y, t_z, φ, ψ, θ]`.
    pub fn location(&self) -> Vec<f64> {
        vec![self.t.x, self.t.y, self.t.z, self.phi, self.psi, self.theta]
    }

    pub fn from_location(x: &[f64]) -> Self {
        assert_eq!(x.len(), 6, "palm location has 6 coordinates");
        Self { t: Vector3::new(x[0], x[1], x[2]), phi: x[3], psi: x[4], theta: x[5] }
    }
}

/// Serialized pose: translation plus quaternion `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub translation: [f64; 3],
    pub quaternion: [f64; 4],
}

impl From<&Isometry3<f64>> for PoseRecord {
    fn from(iso: &Isometry3<f64>) -> Self {
        let t = iso.translation.vector;
        let q = iso.rotation.into_inner().coords;
        Self { translation: [t.x, t.y, t.z], quaternion: [q.w, q.x, q.y, q.z] }
    }
}

impl PoseRecord {
    pub fn isometry(&self) -> Isometry3<f64> {
        let [w, x, y, z] = self.quaternion;
        Isometry3::from_parts(
            Translation3::from(Vector3::from(self.translation)),
            UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z)),
        )
    }
}

/// Distance between palm locations: translation norm plus `w_rot` times the
/// rotation angle between the implied quaternions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseMetric {
    pub w_rot: f64,
}

impl Metric for PoseMetric {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let dt = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
        let qa = hyperspherical_to_quaternion(a[3], a[4], a[5]);
        let qb = hyperspherical_to_quaternion(b[3], b[4], b[5]);
        dt + self.w_rot * quaternion_angle(&qa, &qb)
    }
}

/// How [`EllipsoidPair::from_aabbs`] treats a box with a zero extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FlatPolicy {
    Reject,
    /// Replace zero semi-axes by this value.
    Inflate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidPair {
    pub center: Point3<f64>,
    pub inner: Vector3<f64>,
    pub outer: Vector3<f64>,
}

impl EllipsoidPair {
    /// Center = box midpoint, semi-axes = box half extents.
    pub fn from_aabbs(inner: &Aabb, outer: &Aabb, flat: FlatPolicy) -> Result<Self, PoseError> {
        let offset = (inner.center() - outer.center()).norm();
        if offset > 1e-9 {
            return Err(PoseError::CenterMismatch { offset });
        }
        if !outer.contains_box(inner) {
            return Err(PoseError::NotNested);
        }
        let fix = |v: Vector3<f64>| -> Result<Vector3<f64>, PoseError> {
            let mut v = v;
            for axis in 0..3 {
                if v[axis] <= 0.0 {
                    match flat {
                        FlatPolicy::Reject => return Err(PoseError::FlatBox { axis }),
                        FlatPolicy::Inflate(eps) => v[axis] = eps,
                    }
                }
            }
            Ok(v)
        };
        let a1 = fix(inner.half_extents())?;
        let a2 = fix(outer.half_extents())?.zip_map(&a1, f64::max);
        Ok(Self { center: inner.center(), inner: a1, outer: a2 })
    }

    /// Inner ellipsoid from the object box, outer from the same box scaled.
    pub fn around(object: &Aabb, outer_scale: f64, flat: FlatPolicy) -> Result<Self, PoseError> {
        Self::from_aabbs(object, &object.scaled(outer_scale), flat)
    }

    fn implicit(&self, axes: &Vector3<f64>, t: &Point3<f64>) -> f64 {
        (t - self.center).component_div(axes).norm_squared()
    }

    /// Σ ((t − c)/a₁)²; 1 on the inner shell.
    pub fn inner_value(&self, t: &Point3<f64>) -> f64 {
        self.implicit(&self.inner, t)
    }

    /// Σ ((t − c)/a₂)²; 1 on the outer shell.
    pub fn outer_value(&self, t: &Point3<f64>) -> f64 {
        self.implicit(&self.outer, t)
    }

    fn direction(&self, theta_s: f64, phi_s: f64) -> Vector3<f64> {
        let (st, ct) = theta_s.sin_cos();
        let (sp, cp) = phi_s.sin_cos();
        Vector3::new(self.inner.x * st * cp, self.inner.y * st * sp, self.inner.z * ct)
    }

    /// Radius factor at which the inner-ellipsoid ray meets the outer shell.
    pub fn rmax(&self, theta_s: f64, phi_s: f64) -> f64 {
        let d = self.direction(theta_s, phi_s).component_div(&self.outer);
        1.0 / d.norm()
    }

    /// Maps `u ∈ [0,1]³` to θ_s = πu₀, φ_s = 2πu₁, r = 1 + u₂(r_max − 1).
    pub fn sample_translation(&self, u: [f64; 3]) -> Point3<f64> {
        let theta_s = PI * u[0];
        let phi_s = TAU * u[1];
        let r = 1.0 + u[2] * (self.rmax(theta_s, phi_s) - 1.0);
        self.center + self.direction(theta_s, phi_s) * r
    }
}

/// The 6-D unit-cube parameterization used by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseDomain {
    pub ellipsoids: EllipsoidPair,
}

impl PoseDomain {
    pub fn new(ellipsoids: EllipsoidPair) -> Self {
        Self { ellipsoids }
    }

    /// `u[0..3]` drive the shell sampler, `u[3..6]` give φ = πu₃, ψ = πu₄, θ = 2πu₅.
    pub fn pose_from_unit(&self, u: &[f64]) -> PalmPose {
        assert_eq!(u.len(), 6, "unit pose has 6 coordinates");
        let t = self.ellipsoids.sample_translation([u[0], u[1], u[2]]);
        PalmPose { t: t.coords, phi: PI * u[3], psi: PI * u[4], theta: TAU * u[5] }
    }
}

/// Palm pose facing the chart: palm +z is sent to −N, the palm sits `standoff`
/// along N from the chart center, then rolls by `theta_z` about its own z.
pub fn chart_aligned_pose(chart: &Chart, standoff: f64, theta_z: f64) -> Isometry3<f64> {
    chart_aligned_pose_at(&chart.center, &chart.normal, standoff, theta_z)
}

pub fn chart_aligned_pose_at(
    anchor: &Point3<f64>,
    normal: &Vector3<f64>,
    standoff: f64,
    theta_z: f64,
) -> Isometry3<f64> {
    let target = -normal.normalize();
    let z = Vector3::z();
    let cross = z.cross(&target);
    let angle = cross.norm().atan2(z.dot(&target));
    let align = if cross.norm() > 1e-12 {
        UnitQuaternion::from_axis_angle(&Unit::new_normalize(cross), angle)
    } else if angle > PI / 2.0 {
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI)
    } else {
        UnitQuaternion::identity()
    };
    let roll = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta_z);
    let t = anchor.coords + normal.normalize() * standoff;
    Isometry3::from_parts(Translation3::from(t), align * roll)
}
