//! Rotation group primitives.
//!
//! Rotations are kept as 3×3 matrices throughout: the mass-matrix blocks are
//! built from products like `R·I·Rᵀ`, and the matrix form avoids any
//! quaternion round trips.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::So3Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this angle the exp/log coefficients switch to their Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Below this angle the Jacobian coefficients (which suffer a cubic
/// cancellation) switch to their series.
const JACOBIAN_SERIES_ANGLE: f64 = 0.1;

/// Orthogonality and determinant tolerance for [`Rotation::new`].
pub const ROTATION_TOL: f64 = 1e-9;

const SKEW_TOL: f64 = 1e-8;

/// An element of SO(3), stored as its matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Validates orthogonality and orientation.
    pub fn new(m: Mat3) -> Result<Self, So3Error> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(So3Error::NotARotation { orthogonality: f64::NAN, det: f64::NAN });
        }
        let orthogonality = orthogonality_error(&m);
        let det = m.determinant();
        if orthogonality > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::NotARotation { orthogonality, det });
        }
        Ok(Rotation(m))
    }

    /// Wraps a matrix the caller knows to be a rotation (e.g. a product of
    /// rotations).
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn from_axis_angle(v: &Vec3) -> Self {
        exp_so3(v)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.0)
    }

    pub fn log(&self) -> Vec3 {
        log_so3(self)
    }

    /// Right perturbation `R·exp(hat(v))`.
    pub fn retract(&self, v: &Vec3) -> Self {
        Rotation(self.0 * exp_so3(v).0)
    }

    pub fn angle_to(&self, other: &Rotation) -> f64 {
        log_so3(&(self.transpose() * *other)).norm()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn orthogonality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// Cross-product matrix: `hat(v)·w = v × w`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices that are not skew-symmetric.
pub fn vee(s: &Mat3) -> Result<Vec3, So3Error> {
    let asym = (s + s.transpose()).norm();
    if !(asym <= SKEW_TOL) {
        return Err(So3Error::NonSkew(asym));
    }
    Ok(vee_unchecked(s))
}

/// Reads the axial vector of the skew part without checking symmetry.
pub(crate) fn vee_unchecked(s: &Mat3) -> Vec3 {
    Vec3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)])
}

/// `vee((S − Sᵀ)/2)` for an arbitrary matrix.
pub fn skew_part(s: &Mat3) -> Vec3 {
    0.5 * Vec3::new(s[(2, 1)] - s[(1, 2)], s[(0, 2)] - s[(2, 0)], s[(1, 0)] - s[(0, 1)])
}

/// Rodrigues' formula.
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        // 1 − cos θ written as 2 sin²(θ/2) to avoid cancellation
        let s = (0.5 * theta).sin() / theta;
        (theta.sin() / theta, 2.0 * s * s)
    };
    let k = hat(v);
    Rotation(Mat3::identity() + a * k + b * (k * k))
}

/// Principal logarithm, `‖log R‖ ∈ [0, π]`.
///
/// At exactly π the axis is taken from the column of `(R + Rᵀ)/2 + I` with
/// the largest diagonal entry and signed so that its first nonzero component
/// is positive.
pub fn log_so3(r: &Rotation) -> Vec3 {
    let m = &r.0;
    let axial = skew_part(m); // sin θ · n
    let s = axial.norm();
    let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = s.atan2(c);

    if theta < SMALL_ANGLE {
        // θ / sin θ ≈ 1 + θ²/6
        return (1.0 + theta * theta / 6.0) * axial;
    }
    if c > -0.99 {
        return (theta / s) * axial;
    }

    // Near π: sin θ is small, so read the axis from the symmetric part
    // (R + Rᵀ)/2 = cos θ·I + (1 − cos θ)·n nᵀ.
    let sym = 0.5 * (m + m.transpose());
    let nnt = (sym - c * Mat3::identity()) / (1.0 - c);
    let k = (0..3).max_by(|&i, &j| nnt[(i, i)].total_cmp(&nnt[(j, j)])).unwrap_or(0);
    let mut axis: Vec3 = nnt.column(k).into_owned() / nnt[(k, k)].sqrt();
    axis.normalize_mut();
    if axis.dot(&axial) < 0.0 {
        axis = -axis;
    }
    if s < 1e-12 {
        // antipodal to working precision: fix the sign by convention
        let first = axis.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        if first < 0.0 {
            axis = -axis;
        }
    }
    let theta = if s == 0.0 { PI } else { theta };
    theta * axis
}

/// Nearest rotation in the Frobenius norm (orthogonal polar factor), via the
/// scaled Newton iteration `X ← ½(γX + X⁻ᵀ/γ)`.
pub fn project_so3(m: &Mat3) -> Result<Rotation, So3Error> {
    let det = m.determinant();
    if !(det > 1e-12) {
        return Err(So3Error::Degenerate(det));
    }
    let mut x = *m;
    for _ in 0..100 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return Err(So3Error::Degenerate(x.determinant())),
        };
        // determinant scaling speeds up the first iterations
        let gamma = x.determinant().abs().powf(-1.0 / 3.0);
        let next = 0.5 * (gamma * x + inv_t / gamma);
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(Rotation(x))
}

/// Right Jacobian: `d/dt exp(θ) = exp(θ)·hat(J_r(θ)·θ̇)`.
pub fn right_jacobian(v: &Vec3) -> Mat3 {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(v);
    let (b, c) = if theta < JACOBIAN_SERIES_ANGLE {
        let t4 = theta2 * theta2;
        (
            0.5 - theta2 / 24.0 + t4 / 720.0 - t4 * theta2 / 40320.0 + t4 * t4 / 3628800.0,
            1.0 / 6.0 - theta2 / 120.0 + t4 / 5040.0 - t4 * theta2 / 362880.0 + t4 * t4 / 39916800.0,
        )
    } else {
        let s = (0.5 * theta).sin() / theta;
        (2.0 * s * s, (theta - theta.sin()) / (theta2 * theta))
    };
    Mat3::identity() - b * k + c * (k * k)
}

/// Inverse of [`right_jacobian`]; singular at ‖θ‖ = 2π.
pub fn right_jacobian_inv(v: &Vec3) -> Mat3 {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(v);
    let d = if theta < JACOBIAN_SERIES_ANGLE {
        let t4 = theta2 * theta2;
        1.0 / 12.0 + theta2 / 720.0 + t4 / 30240.0 + t4 * theta2 / 1209600.0 + t4 * t4 / 47900160.0
    } else {
        1.0 / theta2 - 1.0 / (2.0 * theta * (0.5 * theta).tan())
    };
    Mat3::identity() + 0.5 * k + d * (k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-3.0f64..3.0).prop_map(Vec3::from)
    }

    #[test]
    fn hat_examples() {
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(hat(&Vec3::new(1.0, 2.0, 3.0)), expected);
        assert_eq!(vee(&expected).unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
    }

    #[test]
    fn vee_rejects_symmetric_input() {
        assert!(matches!(vee(&Mat3::identity()), Err(So3Error::NonSkew(_))));
    }

    #[test]
    fn exp_quarter_turn() {
        let r = exp_so3(&Vec3::new(PI / 2.0, 0.0, 0.0));
        assert_relative_eq!(r * Vec3::y(), Vec3::z(), epsilon = 1e-15);
        assert_eq!(exp_so3(&Vec3::zeros()), Rotation::identity());
    }

    #[test]
    fn log_identity_and_antipodal() {
        assert_eq!(log_so3(&Rotation::identity()), Vec3::zeros());
        let half_turn = Rotation::new(Mat3::new(-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(log_so3(&half_turn), Vec3::new(0.0, 0.0, PI), epsilon = 1e-15);
        // antipodal about a tilted axis: the sign rule makes the first
        // component positive
        let axis = Vec3::new(-1.0, 2.0, 2.0) / 3.0;
        let r = exp_so3(&(PI * axis));
        assert_relative_eq!(log_so3(&r), -PI * axis, epsilon = 1e-7);
    }

    #[test]
    fn log_near_pi_is_accurate() {
        let axis = Vec3::new(0.3, -0.4, 0.5).normalize();
        for delta in [1e-3, 1e-6, 1e-9] {
            let v = (PI - delta) * axis;
            assert_relative_eq!(log_so3(&exp_so3(&v)), v, epsilon = 1e-9);
        }
    }

    #[test]
    fn project_examples() {
        assert_relative_eq!(
            *project_so3(&(1.01 * Mat3::identity())).unwrap().matrix(),
            Mat3::identity(),
            epsilon = 1e-14
        );
        assert!(matches!(project_so3(&Mat3::zeros()), Err(So3Error::Degenerate(_))));
        assert!(project_so3(&-Mat3::identity()).is_err());
    }

    #[test]
    fn rotation_validation() {
        assert!(Rotation::new(Mat3::identity()).is_ok());
        assert!(Rotation::new(2.0 * Mat3::identity()).is_err());
        assert!(Rotation::new(-Mat3::identity()).is_err());
    }

    #[test]
    fn jacobian_series_matches_closed_form_at_switch() {
        let axis = Vec3::new(0.2, -0.7, 0.4).normalize();
        let below = right_jacobian(&(0.0999999999 * axis));
        let above = right_jacobian(&(0.1000000001 * axis));
        assert_relative_eq!(below, above, epsilon = 1e-9);
        let below = right_jacobian_inv(&(0.0999999999 * axis));
        let above = right_jacobian_inv(&(0.1000000001 * axis));
        assert_relative_eq!(below, above, epsilon = 1e-9);
    }

    #[test]
    fn right_jacobian_matches_finite_differences() {
        let theta = Vec3::new(0.4, -1.1, 0.7);
        let rate = Vec3::new(-0.3, 0.5, 0.9);
        let h = 1e-6;
        let rp = exp_so3(&(theta + h * rate));
        let rm = exp_so3(&(theta - h * rate));
        let rdot = (rp.matrix() - rm.matrix()) / (2.0 * h);
        let omega = skew_part(&(exp_so3(&theta).matrix().transpose() * rdot));
        assert_relative_eq!(omega, right_jacobian(&theta) * rate, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn hat_is_cross_product(v in vec3(), w in vec3()) {
            let d = hat(&v) * w - v.cross(&w);
            prop_assert!(d.norm() <= 1e-14);
        }

        #[test]
        fn hat_is_linear(u in vec3(), v in vec3(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let d = hat(&(a * u + b * v)) - (a * hat(&u) + b * hat(&v));
            prop_assert!(d.norm() <= 1e-14);
        }

        #[test]
        fn vee_hat_roundtrip(v in vec3()) {
            prop_assert_eq!(vee(&hat(&v)).unwrap(), v);
            let s = hat(&v);
            prop_assert_eq!(hat(&vee(&s).unwrap()), s);
        }

        #[test]
        fn exp_is_a_rotation_and_isometry(v in vec3(), w in vec3()) {
            let r = exp_so3(&v);
            prop_assert!(r.orthogonality_error() <= 1e-12);
            prop_assert!((r.matrix().determinant() - 1.0).abs() <= 1e-12);
            prop_assert!(((r * w).norm() - w.norm()).abs() <= 1e-12 * (1.0 + w.norm()));
        }

        #[test]
        fn exp_inverse(v in vec3()) {
            let p = exp_so3(&v) * exp_so3(&-v);
            prop_assert!((p.matrix() - Mat3::identity()).norm() <= 1e-14);
        }

        #[test]
        fn log_exp_roundtrip(dir in vec3(), angle in 0.0f64..(PI - 0.1)) {
            prop_assume!(dir.norm() > 1e-3);
            let v = angle * dir.normalize();
            prop_assert!((log_so3(&exp_so3(&v)) - v).norm() <= 1e-9);
        }

        #[test]
        fn log_exp_roundtrip_small(v in prop::array::uniform3(-1e-4f64..1e-4).prop_map(Vec3::from)) {
            prop_assert!((log_so3(&exp_so3(&v)) - v).norm() <= 1e-18);
        }

        #[test]
        fn projection_is_idempotent(v in vec3()) {
            let r = exp_so3(&v);
            let p = project_so3(r.matrix()).unwrap();
            prop_assert!((p.matrix() - r.matrix()).norm() <= 1e-12);
        }

        #[test]
        fn projection_perturbation_bound(v in vec3(), e in prop::array::uniform9(-1.0f64..1.0)) {
            let r = exp_so3(&v);
            let e = Mat3::from_row_slice(&e);
            prop_assume!(e.norm() > 1e-3);
            let p = project_so3(&(r.matrix() + 1e-6 * e / e.norm())).unwrap();
            prop_assert!((p.matrix() - r.matrix()).norm() <= 2e-6);
            prop_assert!(p.orthogonality_error() <= 1e-12);
        }

        #[test]
        fn jacobian_inverse(v in vec3()) {
            let d = right_jacobian(&v) * right_jacobian_inv(&v) - Mat3::identity();
            prop_assert!(d.norm() <= 1e-12);
        }
    }
}
