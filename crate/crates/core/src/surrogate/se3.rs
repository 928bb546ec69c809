use nalgebra::{Isometry3, Matrix3, UnitQuaternion, Vector3};

use super::SurrogateError;

const ROTATION_TOL: f64 = 1e-6;

/// Rotation angle of `r`, i.e. ‖log R‖_F / √2, computed robustly near 0 and π.
pub fn rotation_angle(r: &Matrix3<f64>) -> f64 {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let skew = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let sin = skew.norm() / 2.0;
    sin.atan2(cos)
}

fn check_rotation(r: &Matrix3<f64>) -> Result<(), SurrogateError> {
    let orth = (r.transpose() * r - Matrix3::identity()).amax();
    let det = r.determinant();
    if orth > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
        return Err(SurrogateError::NotARotation { orthogonality_error: orth, determinant: det });
    }
    Ok(())
}

/// Δ_T = ‖t₁ − t₂‖ + w_rot · ‖log(R₁ᵀR₂)‖_F / √2.
pub fn se3_distance(
    r1: &Matrix3<f64>,
    t1: &Vector3<f64>,
    r2: &Matrix3<f64>,
    t2: &Vector3<f64>,
    w_rot: f64,
) -> Result<f64, SurrogateError> {
    check_rotation(r1)?;
    check_rotation(r2)?;
    Ok((t1 - t2).norm() + w_rot * rotation_angle(&(r1.transpose() * r2)))
}

pub fn isometry_distance(a: &Isometry3<f64>, b: &Isometry3<f64>, w_rot: f64) -> f64 {
    (a.translation.vector - b.translation.vector).norm() + w_rot * quaternion_angle(&a.rotation, &b.rotation)
}

/// Geodesic angle between two unit quaternions, insensitive to sign.
pub fn quaternion_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let b = b.coords * a.coords.dot(&b.coords).signum();
    // rotation angle is twice the S³ angle; the atan2 form keeps precision near 0 and π
    4.0 * (a.coords - b).norm().atan2((a.coords + b).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Unit};
    use std::f64::consts::PI;

    /// ‖log R‖_F/√2 with the matrix logarithm taken from nalgebra's axis-angle.
    fn log_norm_oracle(r: &Matrix3<f64>) -> f64 {
        let v = Rotation3::from_matrix_unchecked(*r).scaled_axis();
        let skew = Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0);
        skew.norm() / 2f64.sqrt()
    }

    #[test]
    fn identical_transforms_have_zero_distance() {
        let r = *Rotation3::from_euler_angles(0.3, -1.0, 2.0).matrix();
        let t = Vector3::new(0.1, 0.2, 0.3);
        assert_eq!(se3_distance(&r, &t, &r, &t, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn half_turn_about_z() {
        let r = *Rotation3::from_axis_angle(&Vector3::z_axis(), PI).matrix();
        let z = Vector3::zeros();
        let d = se3_distance(&Matrix3::identity(), &z, &r, &z, 1.0).unwrap();
        assert!((d - PI).abs() < 1e-9);
        assert!((log_norm_oracle(&r) - PI).abs() < 1e-9);
    }

    #[test]
    fn pure_translation() {
        let i = Matrix3::identity();
        let d = se3_distance(&i, &Vector3::zeros(), &i, &Vector3::new(1.0, 0.0, 0.0), 0.1).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn rejects_non_rotations() {
        let bad = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let z = Vector3::zeros();
        assert!(matches!(
            se3_distance(&bad, &z, &Matrix3::identity(), &z, 0.1),
            Err(SurrogateError::NotARotation { .. })
        ));
    }

    #[test]
    fn angle_agrees_with_log_oracle_and_quaternion_form() {
        for (k, angle) in [1e-7, 0.01, 0.5, 1.7, 3.0, PI - 1e-6].into_iter().enumerate() {
            let axis = Unit::new_normalize(Vector3::new(1.0, k as f64 - 2.0, 0.5));
            let q1 = UnitQuaternion::from_euler_angles(0.2 * k as f64, 0.1, -0.4);
            let q2 = q1 * UnitQuaternion::from_axis_angle(&axis, angle);
            let rel = q1.to_rotation_matrix().matrix().transpose() * q2.to_rotation_matrix().matrix();
            assert!((rotation_angle(&rel) - angle).abs() < 1e-9);
            assert!((log_norm_oracle(&rel) - angle).abs() < 1e-8);
            assert!((quaternion_angle(&q1, &q2) - angle).abs() < 1e-9);
            // sign of the quaternion does not matter
            let neg = UnitQuaternion::new_unchecked(-q2.into_inner());
            assert!((quaternion_angle(&q1, &neg) - angle).abs() < 1e-9);
        }
    }
}
