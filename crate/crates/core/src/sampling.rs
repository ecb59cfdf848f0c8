//! Random parameters and states for property tests and the `check` suites.

use rand::Rng;

use crate::dynamics::{GaitSpec, ReducedState};
use crate::model::{BodyInertia, InertialParams, ReducedPose, ShapeConfig, Vector12, VelocityZ, WingInertia};
use crate::oracle::{Chart, OracleState};
use crate::so3::{exp_so3, Mat3, Rotation, Vec3};

/// Uniformly distributed rotation (axis uniform on the sphere, angle with
/// the Haar density).
pub fn random_rotation(rng: &mut impl Rng) -> Rotation {
    // unit quaternion from four normals, converted by hand
    let q: [f64; 4] = std::array::from_fn(|_| normal(rng));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    let m = Mat3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    );
    Rotation::from_matrix_unchecked(m)
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

pub fn random_vec3(rng: &mut impl Rng, scale: f64) -> Vec3 {
    if scale == 0.0 {
        return Vec3::zeros();
    }
    Vec3::from_fn(|_, _| rng.gen_range(-scale..scale))
}

/// Principal moments drawn in `[lo, hi]` satisfying the triangle inequality,
/// rotated into a random principal frame.
fn random_inertia(rng: &mut impl Rng, lo: f64, hi: f64) -> Mat3 {
    let (a, b) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    let c = rng.gen_range((a - b).abs().max(lo * 0.5)..(a + b));
    let r = random_rotation(rng);
    let i = r.matrix() * Mat3::from_diagonal(&Vec3::new(a, b, c)) * r.matrix().transpose();
    0.5 * (i + i.transpose())
}

/// Desk-scale parameters: torso of about 1 kg, wings of about 0.1 kg.
pub fn random_params(rng: &mut impl Rng) -> InertialParams {
    let body = BodyInertia { mass: rng.gen_range(0.5..2.0), inertia: random_inertia(rng, 0.01, 0.05) };
    let mut wing = |sign: f64| {
        let mass = rng.gen_range(0.05..0.2);
        let com_offset =
            Vec3::new(rng.gen_range(-0.03..0.03), sign * rng.gen_range(0.05..0.15), rng.gen_range(-0.03..0.03));
        // about the hinge: central inertia plus the parallel-axis term
        let shift = mass * (com_offset.norm_squared() * Mat3::identity() - com_offset * com_offset.transpose());
        WingInertia { mass, inertia: random_inertia(rng, 0.0005, 0.002) + shift, com_offset }
    };
    let left = wing(1.0);
    let right = wing(-1.0);
    InertialParams::new(body, left, right, 9.81, 1000.0).expect("sampled parameters are valid")
}

pub fn random_shape(rng: &mut impl Rng) -> ShapeConfig {
    ShapeConfig { left: random_rotation(rng), right: random_rotation(rng) }
}

pub fn random_pose(rng: &mut impl Rng) -> ReducedPose {
    let attitude = random_rotation(rng);
    ReducedPose { r: random_vec3(rng, 2.0), gamma: attitude.transpose() * Vec3::z(), shape: random_shape(rng) }
}

pub fn random_velocity(rng: &mut impl Rng, scale: f64) -> VelocityZ {
    VelocityZ {
        v: random_vec3(rng, scale),
        w_body: random_vec3(rng, scale),
        w_left: random_vec3(rng, scale),
        w_right: random_vec3(rng, scale),
    }
}

/// A full consistent state near hover attitude: moderate tilt, wings spread
/// within ±0.6 rad of the torso, rates up to `rate` rad/s.
pub fn random_state(rng: &mut impl Rng, rate: f64) -> ReducedState {
    let attitude = exp_so3(&random_vec3(rng, 0.6));
    let shape = ShapeConfig { left: exp_so3(&random_vec3(rng, 0.6)), right: exp_so3(&random_vec3(rng, 0.6)) };
    let z = VelocityZ {
        v: random_vec3(rng, 1.0),
        w_body: random_vec3(rng, rate),
        w_left: random_vec3(rng, rate),
        w_right: random_vec3(rng, rate),
    };
    ReducedState::new(attitude, random_vec3(rng, 1.0), shape, z, 0.0)
}

/// An oracle state on a random chart with angle coordinates inside the
/// re-centering radius, so the matched reduced state is not at a chart origin.
pub fn random_chart_state(rng: &mut impl Rng, rate: f64) -> OracleState {
    let chart = Chart { attitude: random_rotation(rng), left: random_rotation(rng), right: random_rotation(rng) };
    let mut q = Vector12::zeros();
    let mut qdot = Vector12::zeros();
    for at in [0, 3, 6, 9] {
        let scale = if at == 3 { 2.0 } else { 0.55 };
        q.fixed_rows_mut::<3>(at).copy_from(&random_vec3(rng, scale));
        qdot.fixed_rows_mut::<3>(at).copy_from(&random_vec3(rng, rate));
    }
    OracleState { chart, q, qdot, t: 0.0 }
}

/// Flapping about the wing x axes with opposite phases.
pub fn random_gait(rng: &mut impl Rng) -> GaitSpec {
    GaitSpec::new(
        rng.gen_range(0.02..0.1),
        rng.gen_range(2.0..10.0),
        [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0) + std::f64::consts::PI],
        [Vec3::x(), Vec3::x()],
    )
    .expect("sampled gait is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sampled_rotations_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            assert!(Rotation::new(*r.matrix()).is_ok());
        }
    }

    #[test]
    fn sampled_states_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let st = random_state(&mut rng, 3.0);
            assert!(st.gamma_consistency() <= 1e-14);
            assert!((st.pose.gamma.norm() - 1.0).abs() <= 1e-14);
        }
    }
}
