//! Physical parameters, the shape-dependent mass matrix and the reduced
//! Lagrangian in torso coordinates.
//!
//! Wing frames have their origin at the hinge, which coincides with the
//! torso center of mass, and wing inertias are taken about that origin. The
//! wing center-of-mass offsets `h̄` only enter the potential; the first-moment
//! coupling between translation and rotation is not modelled, so the
//! translational block of the mass matrix decouples.

use nalgebra::{SMatrix, SVector};

use crate::error::ParamError;
use crate::so3::{Mat3, Rotation, Vec3};

pub type Vector12 = SVector<f64, 12>;
pub type Matrix12 = SMatrix<f64, 12, 12>;

const SYMMETRY_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wing {
    Left,
    Right,
}

impl Wing {
    pub const BOTH: [Wing; 2] = [Wing::Left, Wing::Right];

    pub fn name(self) -> &'static str {
        match self {
            Wing::Left => "left_wing",
            Wing::Right => "right_wing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyInertia {
    /// kg
    pub mass: f64,
    /// kg·m², about the torso center of mass, body frame
    pub inertia: Mat3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingInertia {
    /// kg
    pub mass: f64,
    /// kg·m², about the hinge, wing frame
    pub inertia: Mat3,
    /// Center of mass in the wing frame (m).
    pub com_offset: Vec3,
}

/// Validated mass properties of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialParams {
    body: BodyInertia,
    left: WingInertia,
    right: WingInertia,
    gravity: f64,
    density: f64,
}

impl InertialParams {
    pub fn new(
        body: BodyInertia,
        left: WingInertia,
        right: WingInertia,
        gravity: f64,
        density: f64,
    ) -> Result<Self, ParamError> {
        check_mass("body.mass", body.mass)?;
        check_inertia("body.inertia", &body.inertia)?;
        for (name, w) in [("left_wing", &left), ("right_wing", &right)] {
            check_mass(&format!("{name}.mass"), w.mass)?;
            check_inertia(&format!("{name}.inertia"), &w.inertia)?;
            if w.com_offset.iter().any(|x| !x.is_finite()) {
                return Err(ParamError::new(format!("{name}.com_offset"), "must be finite"));
            }
        }
        if !(gravity.is_finite() && gravity >= 0.0) {
            return Err(ParamError::new("gravity", format!("must be finite and non-negative (got {gravity})")));
        }
        if !(density.is_finite() && density >= 0.0) {
            return Err(ParamError::new("density", format!("must be finite and non-negative (got {density})")));
        }
        Ok(InertialParams { body, left, right, gravity, density })
    }

    pub fn body(&self) -> &BodyInertia {
        &self.body
    }

    pub fn wing(&self, wing: Wing) -> &WingInertia {
        match wing {
            Wing::Left => &self.left,
            Wing::Right => &self.right,
        }
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn total_mass(&self) -> f64 {
        self.body.mass + self.left.mass + self.right.mass
    }

    /// Same parameters with a different gravitational acceleration.
    pub fn with_gravity(&self, gravity: f64) -> Result<Self, ParamError> {
        Self::new(self.body, self.left, self.right, gravity, self.density)
    }
}

fn check_mass(field: &str, m: f64) -> Result<(), ParamError> {
    if !(m.is_finite() && m > 0.0) {
        return Err(ParamError::new(field, format!("must be positive (got {m})")));
    }
    Ok(())
}

fn check_inertia(field: &str, i: &Mat3) -> Result<(), ParamError> {
    if i.iter().any(|x| !x.is_finite()) {
        return Err(ParamError::new(field, "entries must be finite"));
    }
    let asym = (i - i.transpose()).norm();
    if asym > SYMMETRY_TOL * i.norm().max(1.0) {
        return Err(ParamError::new(field, format!("must be symmetric (‖I − Iᵀ‖ = {asym:e})")));
    }
    if i.cholesky().is_none() {
        return Err(ParamError::new(field, "must be positive definite"));
    }
    Ok(())
}

/// Attitudes of the wings relative to the torso.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeConfig {
    pub left: Rotation,
    pub right: Rotation,
}

impl ShapeConfig {
    pub fn identity() -> Self {
        ShapeConfig { left: Rotation::identity(), right: Rotation::identity() }
    }

    pub fn wing(&self, wing: Wing) -> &Rotation {
        match wing {
            Wing::Left => &self.left,
            Wing::Right => &self.right,
        }
    }

    pub fn wing_mut(&mut self, wing: Wing) -> &mut Rotation {
        match wing {
            Wing::Left => &mut self.left,
            Wing::Right => &mut self.right,
        }
    }
}

/// Stacked velocities `Z = (v, ω_B, ω_WL, ω_WR)`.
///
/// `v` is the torso velocity in the body frame, `ω_B` the torso angular
/// velocity in the body frame, and the wing rates are relative to the torso,
/// expressed in the respective wing frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityZ {
    pub v: Vec3,
    pub w_body: Vec3,
    pub w_left: Vec3,
    pub w_right: Vec3,
}

impl VelocityZ {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn wing(&self, wing: Wing) -> &Vec3 {
        match wing {
            Wing::Left => &self.w_left,
            Wing::Right => &self.w_right,
        }
    }

    pub fn to_vector(&self) -> Vector12 {
        stack(&self.v, &self.w_body, &self.w_left, &self.w_right)
    }

    pub fn from_vector(x: &Vector12) -> Self {
        let [v, w_body, w_left, w_right] = unstack(x);
        VelocityZ { v, w_body, w_left, w_right }
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|x| x.is_finite())
    }
}

/// Momenta conjugate to [`VelocityZ`], i.e. the blocks of `M(s)·Z`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Momenta {
    pub linear: Vec3,
    pub body: Vec3,
    pub left: Vec3,
    pub right: Vec3,
}

impl Momenta {
    pub fn wing(&self, wing: Wing) -> &Vec3 {
        match wing {
            Wing::Left => &self.left,
            Wing::Right => &self.right,
        }
    }

    pub fn to_vector(&self) -> Vector12 {
        stack(&self.linear, &self.body, &self.left, &self.right)
    }

    pub fn from_vector(x: &Vector12) -> Self {
        let [linear, body, left, right] = unstack(x);
        Momenta { linear, body, left, right }
    }
}

fn stack(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Vector12 {
    let mut x = Vector12::zeros();
    x.fixed_rows_mut::<3>(0).copy_from(a);
    x.fixed_rows_mut::<3>(3).copy_from(b);
    x.fixed_rows_mut::<3>(6).copy_from(c);
    x.fixed_rows_mut::<3>(9).copy_from(d);
    x
}

fn unstack(x: &Vector12) -> [Vec3; 4] {
    [0, 3, 6, 9].map(|i| x.fixed_rows::<3>(i).into_owned())
}

/// 12×12 mass matrix in 3×3 blocks ordered `(v, ω_B, ω_WL, ω_WR)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassMatrix(Matrix12);

impl MassMatrix {
    pub fn matrix(&self) -> &Matrix12 {
        &self.0
    }

    pub fn block(&self, row: usize, col: usize) -> Mat3 {
        self.0.fixed_view::<3, 3>(3 * row, 3 * col).into_owned()
    }

    pub fn apply(&self, z: &VelocityZ) -> Momenta {
        Momenta::from_vector(&(self.0 * z.to_vector()))
    }
}

/// Pose quantities the reduced Lagrangian depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedPose {
    /// Torso position in the body frame, `R_BIᵀ r_I` (m).
    pub r: Vec3,
    /// Gravity direction in the body frame, `R_BIᵀ e_z`.
    pub gamma: Vec3,
    pub shape: ShapeConfig,
}

impl ReducedPose {
    pub fn new(r: Vec3, gamma: Vec3, shape: ShapeConfig) -> Result<Self, ParamError> {
        if (gamma.norm() - 1.0).abs() > UNIT_TOL {
            return Err(ParamError::new("gamma", format!("must be a unit vector (‖Γ‖ = {})", gamma.norm())));
        }
        Ok(ReducedPose { r, gamma, shape })
    }
}

pub fn assemble_mass_matrix(p: &InertialParams, s: &ShapeConfig) -> MassMatrix {
    let mut m = Matrix12::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&(p.total_mass() * Mat3::identity()));

    let mut torso = p.body.inertia;
    for (k, wing) in Wing::BOTH.into_iter().enumerate() {
        let r = s.wing(wing).matrix();
        let iw = p.wing(wing).inertia;
        let coupling = r * iw;
        torso += coupling * r.transpose();
        let at = 6 + 3 * k;
        m.fixed_view_mut::<3, 3>(3, at).copy_from(&coupling);
        m.fixed_view_mut::<3, 3>(at, 3).copy_from(&coupling.transpose());
        m.fixed_view_mut::<3, 3>(at, at).copy_from(&iw);
    }
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&torso);
    MassMatrix(m)
}

/// `½·Zᵀ·M(s)·Z`.
pub fn kinetic_energy(p: &InertialParams, s: &ShapeConfig, z: &VelocityZ) -> f64 {
    let x = z.to_vector();
    0.5 * x.dot(&(assemble_mass_matrix(p, s).0 * x))
}

pub fn potential_energy(p: &InertialParams, pose: &ReducedPose) -> f64 {
    let g = p.gravity;
    let mut v = p.total_mass() * g * pose.r.dot(&pose.gamma);
    for wing in Wing::BOTH {
        let w = p.wing(wing);
        v += w.mass * g * (pose.shape.wing(wing) * w.com_offset).dot(&pose.gamma);
    }
    v
}

/// `l = T − V`.
pub fn reduced_lagrangian(p: &InertialParams, pose: &ReducedPose, z: &VelocityZ) -> f64 {
    kinetic_energy(p, &pose.shape, z) - potential_energy(p, pose)
}

pub fn momenta(p: &InertialParams, s: &ShapeConfig, z: &VelocityZ) -> Momenta {
    assemble_mass_matrix(p, s).apply(z)
}

/// `∂l/∂r = −m_T·g·Γ`.
pub fn dl_dr(p: &InertialParams, pose: &ReducedPose) -> Vec3 {
    -p.total_mass() * p.gravity * pose.gamma
}

/// `∂l/∂Γ = −g·(m_T·r + Σ m_W·R_W·h̄_W)`.
pub fn dl_dgamma(p: &InertialParams, pose: &ReducedPose) -> Vec3 {
    let mut first_moment = p.total_mass() * pose.r;
    for wing in Wing::BOTH {
        let w = p.wing(wing);
        first_moment += w.mass * (pose.shape.wing(wing) * w.com_offset);
    }
    -p.gravity * first_moment
}

/// Left-trivialized gradient of `l` with respect to a wing attitude:
/// `⟨τ, η⟩ = d/dε l(R_W·exp(ε·hat(η)))` at ε = 0, velocities held fixed.
///
/// With `u = R_Wᵀ·ω_B` (torso rate seen in the wing frame) and
/// `μ = I_W·(u + ω_W)` the wing momentum, the kinetic part is `μ × u` and the
/// potential part is `−m_W·g·h̄ × R_WᵀΓ`.
pub fn shape_gradient(p: &InertialParams, pose: &ReducedPose, z: &VelocityZ, wing: Wing) -> Vec3 {
    let w = p.wing(wing);
    let rt = pose.shape.wing(wing).transpose();
    let u = rt * z.w_body;
    let mu = w.inertia * (u + z.wing(wing));
    let gamma_w = rt * pose.gamma;
    mu.cross(&u) - w.mass * p.gravity * w.com_offset.cross(&gamma_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use crate::so3::{exp_so3, hat};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3::from_diagonal(&Vec3::new(a, b, c))
    }

    fn simple_params(hbar_left: Vec3, gravity: f64) -> InertialParams {
        InertialParams::new(
            BodyInertia { mass: 1.0, inertia: diag(0.02, 0.03, 0.04) },
            WingInertia { mass: 0.1, inertia: diag(0.002, 0.0005, 0.0025), com_offset: hbar_left },
            WingInertia { mass: 0.1, inertia: diag(0.002, 0.0005, 0.0025), com_offset: Vec3::zeros() },
            gravity,
            1000.0,
        )
        .unwrap()
    }

    /// Three point masses with zero first moment about the frame origin.
    struct Particles {
        masses: [f64; 3],
        points: [Vec3; 3],
    }

    impl Particles {
        fn random(rng: &mut impl Rng) -> Self {
            let m = [rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0)];
            let a = Vec3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
            let b = Vec3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
            let c = -(m[0] * a + m[1] * b) / m[2];
            Particles { masses: m, points: [a, b, c] }
        }

        fn mass(&self) -> f64 {
            self.masses.iter().sum()
        }

        fn inertia(&self) -> Mat3 {
            self.masses.iter().zip(&self.points).map(|(m, x)| *m * hat(x).transpose() * hat(x)).sum()
        }
    }

    #[test]
    fn identity_shape_blocks() {
        let p = simple_params(Vec3::zeros(), 9.81);
        let m = assemble_mass_matrix(&p, &ShapeConfig::identity());
        let expected = p.body().inertia + p.wing(Wing::Left).inertia + p.wing(Wing::Right).inertia;
        assert_relative_eq!(m.block(1, 1), expected, epsilon = 1e-15);
        assert_eq!(m.block(0, 0), p.total_mass() * Mat3::identity());
        assert_eq!(m.block(1, 2), p.wing(Wing::Left).inertia);
        assert_eq!(m.block(2, 2), p.wing(Wing::Left).inertia);
        assert_eq!(m.block(3, 3), p.wing(Wing::Right).inertia);
        for (i, j) in [(0, 1), (0, 2), (0, 3), (2, 3)] {
            assert_eq!(m.block(i, j), Mat3::zeros());
            assert_eq!(m.block(j, i), Mat3::zeros());
        }
    }

    #[test]
    fn isotropic_wing_coupling() {
        let c = 0.003;
        let mut p = simple_params(Vec3::zeros(), 0.0);
        p.left.inertia = c * Mat3::identity();
        let m = assemble_mass_matrix(&p, &ShapeConfig::identity());
        assert_relative_eq!(m.block(1, 2), c * Mat3::identity());
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let p = sampling::random_params(&mut rng);
            let s = sampling::random_shape(&mut rng);
            let m = assemble_mass_matrix(&p, &s);
            assert!((m.0 - m.0.transpose()).norm() <= 1e-10);
            let eig = m.0.symmetric_eigenvalues();
            assert!(eig.min() > 0.0, "min eigenvalue {}", eig.min());
        }
    }

    #[test]
    fn kinetic_energy_examples() {
        let p = simple_params(Vec3::zeros(), 9.81);
        let s = ShapeConfig::identity();
        assert_eq!(kinetic_energy(&p, &s, &VelocityZ::zero()), 0.0);
        let v = Vec3::new(0.3, -1.2, 2.0);
        let z = VelocityZ { v, ..VelocityZ::zero() };
        assert_relative_eq!(kinetic_energy(&p, &s, &z), 0.5 * p.total_mass() * v.norm_squared(), epsilon = 1e-15);
    }

    #[test]
    fn kinetic_energy_matches_point_mass_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let parts = [Particles::random(&mut rng), Particles::random(&mut rng), Particles::random(&mut rng)];
            let com = Vec3::from_fn(|_, _| rng.gen_range(-0.3..0.3));
            let p = InertialParams::new(
                BodyInertia { mass: parts[0].mass(), inertia: parts[0].inertia() },
                WingInertia { mass: parts[1].mass(), inertia: parts[1].inertia(), com_offset: com },
                WingInertia { mass: parts[2].mass(), inertia: parts[2].inertia(), com_offset: -com },
                9.81,
                1.0,
            );
            // three collinear-free points always give a definite inertia, but
            // skip the rare near-degenerate draw
            let Ok(p) = p else { continue };
            let s = sampling::random_shape(&mut rng);
            let z = sampling::random_velocity(&mut rng, 2.0);

            let mut brute = 0.0;
            for (m, x) in parts[0].masses.iter().zip(&parts[0].points) {
                brute += 0.5 * m * (z.v + z.w_body.cross(x)).norm_squared();
            }
            for (k, wing) in Wing::BOTH.into_iter().enumerate() {
                let r = s.wing(wing).matrix();
                for (m, x) in parts[k + 1].masses.iter().zip(&parts[k + 1].points) {
                    let vel = z.v + (hat(&z.w_body) * r + r * hat(z.wing(wing))) * x;
                    brute += 0.5 * m * vel.norm_squared();
                }
            }
            let ke = kinetic_energy(&p, &s, &z);
            assert_relative_eq!(ke, brute, max_relative = 1e-12);
            assert!(ke > 0.0);
        }
    }

    #[test]
    fn potential_examples() {
        let p = simple_params(Vec3::zeros(), 9.81);
        let pose = ReducedPose::new(Vec3::zeros(), Vec3::z(), ShapeConfig::identity()).unwrap();
        assert_eq!(potential_energy(&p, &pose), 0.0);
        let pose = ReducedPose { r: Vec3::new(0.0, 0.0, 2.5), ..pose };
        assert_relative_eq!(potential_energy(&p, &pose), p.total_mass() * 9.81 * 2.5, epsilon = 1e-14);
    }

    #[test]
    fn potential_matches_inertial_heights() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = sampling::random_params(&mut rng);
            let attitude = sampling::random_rotation(&mut rng);
            let r_inertial = Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let shape = sampling::random_shape(&mut rng);
            let pose =
                ReducedPose::new(attitude.transpose() * r_inertial, attitude.transpose() * Vec3::z(), shape).unwrap();
            let g = p.gravity();
            let mut heights = p.total_mass() * g * r_inertial.z;
            for wing in Wing::BOTH {
                let w = p.wing(wing);
                heights += w.mass * g * (attitude * (shape.wing(wing) * w.com_offset)).z;
            }
            assert_relative_eq!(potential_energy(&p, &pose), heights, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn lagrangian_examples() {
        let p = simple_params(Vec3::zeros(), 9.81);
        let pose = ReducedPose::new(Vec3::zeros(), Vec3::z(), ShapeConfig::identity()).unwrap();
        assert_eq!(reduced_lagrangian(&p, &pose, &VelocityZ::zero()), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = sampling::random_params(&mut rng);
            let pose = sampling::random_pose(&mut rng);
            let z = sampling::random_velocity(&mut rng, 1.0);
            let l = reduced_lagrangian(&p, &pose, &z);
            let t = kinetic_energy(&p, &pose.shape, &z);
            assert_relative_eq!(l + potential_energy(&p, &pose), t, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_particle_limit() {
        // negligible wings and torso inertia: l = ½ m_B |v|² − m_B g ⟨r, Γ⟩
        let tiny = 1e-300;
        let p = InertialParams::new(
            BodyInertia { mass: 2.0, inertia: tiny * Mat3::identity() },
            WingInertia { mass: tiny, inertia: tiny * Mat3::identity(), com_offset: Vec3::zeros() },
            WingInertia { mass: tiny, inertia: tiny * Mat3::identity(), com_offset: Vec3::zeros() },
            9.81,
            1.0,
        )
        .unwrap();
        let gamma = Vec3::new(0.6, 0.0, 0.8);
        let pose = ReducedPose::new(Vec3::new(1.0, 2.0, 3.0), gamma, ShapeConfig::identity()).unwrap();
        let z = VelocityZ { v: Vec3::new(1.0, -1.0, 0.5), w_body: Vec3::new(3.0, 1.0, 2.0), ..VelocityZ::zero() };
        let expected = 0.5 * 2.0 * z.v.norm_squared() - 2.0 * 9.81 * pose.r.dot(&gamma);
        assert_relative_eq!(reduced_lagrangian(&p, &pose, &z), expected, max_relative = 1e-14);
    }

    #[test]
    fn momenta_examples() {
        let p = simple_params(Vec3::zeros(), 9.81);
        let s = ShapeConfig::identity();
        assert_eq!(momenta(&p, &s, &VelocityZ::zero()), Momenta::default());
        let w = Vec3::new(0.5, -1.0, 2.0);
        let mo = momenta(&p, &s, &VelocityZ { w_body: w, ..VelocityZ::zero() });
        let total = p.body().inertia + p.wing(Wing::Left).inertia + p.wing(Wing::Right).inertia;
        assert_relative_eq!(mo.body, total * w, epsilon = 1e-15);
        assert_relative_eq!(mo.left, p.wing(Wing::Left).inertia * w, epsilon = 1e-15);
        assert_eq!(mo.linear, Vec3::zeros());
    }

    #[test]
    fn position_and_gravity_partials() {
        let p = simple_params(Vec3::zeros(), 0.0);
        let pose = ReducedPose::new(Vec3::new(1.0, 2.0, 3.0), Vec3::z(), ShapeConfig::identity()).unwrap();
        assert_eq!(dl_dr(&p, &pose), Vec3::zeros());
        let p = simple_params(Vec3::zeros(), 9.81);
        assert_relative_eq!(dl_dr(&p, &pose), Vec3::new(0.0, 0.0, -p.total_mass() * 9.81));

        let pose = ReducedPose { r: Vec3::zeros(), ..pose };
        assert_eq!(dl_dgamma(&p, &pose), Vec3::zeros());
        let ell = 0.07;
        let p = simple_params(Vec3::new(0.0, ell, 0.0), 9.81);
        assert_relative_eq!(dl_dgamma(&p, &pose), Vec3::new(0.0, -0.1 * 9.81 * ell, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn shape_gradient_examples() {
        let p = simple_params(Vec3::new(0.0, 0.05, 0.0), 0.0);
        let pose = sampling::random_pose(&mut ChaCha8Rng::seed_from_u64(5));
        for wing in Wing::BOTH {
            assert_eq!(shape_gradient(&p, &pose, &VelocityZ::zero(), wing), Vec3::zeros());
        }

        // Lifting the wing tip (rotation about +x raises +y) increases V, so
        // the gradient of l = T − V about x is −m·g·ℓ.
        let ell = 0.05;
        let p = simple_params(Vec3::new(0.0, ell, 0.0), 9.81);
        let pose = ReducedPose::new(Vec3::zeros(), Vec3::z(), ShapeConfig::identity()).unwrap();
        let tau = shape_gradient(&p, &pose, &VelocityZ::zero(), Wing::Left);
        assert_relative_eq!(tau, Vec3::new(-0.1 * 9.81 * ell, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn shape_gradient_matches_directional_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-6;
        for _ in 0..100 {
            let p = sampling::random_params(&mut rng);
            let pose = sampling::random_pose(&mut rng);
            let z = sampling::random_velocity(&mut rng, 2.0);
            for wing in Wing::BOTH {
                let tau = shape_gradient(&p, &pose, &z, wing);
                let mut fd = Vec3::zeros();
                for k in 0..3 {
                    let mut lp = pose;
                    let mut lm = pose;
                    let e = Vec3::ith(k, h);
                    *lp.shape.wing_mut(wing) = *pose.shape.wing(wing) * exp_so3(&e);
                    *lm.shape.wing_mut(wing) = *pose.shape.wing(wing) * exp_so3(&-e);
                    fd[k] = (reduced_lagrangian(&p, &lp, &z) - reduced_lagrangian(&p, &lm, &z)) / (2.0 * h);
                }
                let err = (fd - tau).norm() / tau.norm().max(1.0);
                assert!(err <= 1e-6, "{wing:?}: {err:e}");
            }
        }
    }

    #[test]
    fn parameter_validation_names_the_field() {
        let good = simple_params(Vec3::zeros(), 9.81);
        let mut body = *good.body();
        body.mass = -1.0;
        let err = InertialParams::new(body, good.left, good.right, 9.81, 1.0).unwrap_err();
        assert_eq!(err.field, "body.mass");

        let mut left = good.left;
        left.inertia[(0, 1)] = 1e-3;
        let err = InertialParams::new(good.body, left, good.right, 9.81, 1.0).unwrap_err();
        assert_eq!(err.field, "left_wing.inertia");

        let mut right = good.right;
        right.inertia = diag(1.0, -1.0, 1.0);
        let err = InertialParams::new(good.body, good.left, right, 9.81, 1.0).unwrap_err();
        assert_eq!(err.field, "right_wing.inertia");

        assert_eq!(good.with_gravity(-1.0).unwrap_err().field, "gravity");
        assert!(ReducedPose::new(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.1), ShapeConfig::identity()).is_err());
    }
}
