//! Forced reduced equations of motion.
//!
//! The state is advanced in momentum form. With `(p, π_B, μ_L, μ_R) = M(s)·Z`
//! and the coadjoint convention `ad*_ω μ = μ × ω`:
//!
//! ```text
//! ṗ   = p × ω_B + ∂l/∂r + F_a
//! π̇_B = π_B × ω_B + p × v + ∂l/∂Γ × Γ − r × ∂l/∂r + T_aB
//! μ̇_W = μ_W × ω_W + τ_W + T_cW + T_aW          (W = L, R)
//! Γ̇   = −ω_B × Γ
//! ṙ   = −ω_B × r + v,      ṙ_I = R_BI·v
//! Ṙ_BI = R_BI·hat(ω_B),    Ṙ_WB = R_WB·hat(ω_W)
//! ```
//!
//! where `τ_W` is the left-trivialized shape gradient of the reduced
//! Lagrangian. The two gravity terms in the torso equation combine to
//! `−Σ m_W·g·(R_WB·h̄_W) × Γ`, the torque of the wing weights about the hinge.
//!
//! All force inputs are generalized forces conjugate to the matching slot of
//! `Z`: `F_a` pairs with `v` (body frame), `T_aB` with `ω_B` (body frame) and
//! the wing torques with the relative wing rates (wing frames). Control
//! torques act across the joints, so they appear only in the wing equations.

use std::f64::consts::TAU;
use std::ops::Add;

use crate::error::{DynamicsError, ParamError};
use crate::model::{self, InertialParams, Momenta, ReducedPose, ShapeConfig, VelocityZ, Wing};
use crate::so3::{hat, Mat3, Rotation, Vec3};

/// Everything needed to advance the vehicle: the reduced pose and
/// velocities, plus the reconstructed torso attitude and inertial position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub pose: ReducedPose,
    pub z: VelocityZ,
    /// `R_BI`
    pub attitude: Rotation,
    /// `r_I` (m)
    pub position: Vec3,
    pub t: f64,
}

impl ReducedState {
    /// Builds a consistent state, deriving `Γ` and the body-frame position
    /// from the attitude.
    pub fn new(attitude: Rotation, position: Vec3, shape: ShapeConfig, z: VelocityZ, t: f64) -> Self {
        let rt = attitude.transpose();
        ReducedState { pose: ReducedPose { r: rt * position, gamma: rt * Vec3::z(), shape }, z, attitude, position, t }
    }

    /// `‖Γ − R_BIᵀ·e_z‖`
    pub fn gamma_consistency(&self) -> f64 {
        (self.pose.gamma - self.attitude.transpose() * Vec3::z()).norm()
    }

    pub fn is_finite(&self) -> bool {
        let rotations = [&self.attitude, &self.pose.shape.left, &self.pose.shape.right];
        self.z.is_finite()
            && self.t.is_finite()
            && [self.pose.r, self.pose.gamma, self.position].iter().all(|v| v.iter().all(|x| x.is_finite()))
            && rotations.iter().all(|r| r.matrix().iter().all(|x| x.is_finite()))
    }
}

/// Aerodynamic and control loads. Frames: `force` and `torque_body` in the
/// body frame, wing torques in the respective wing frames.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceInputs {
    pub force: Vec3,
    pub torque_body: Vec3,
    pub torque_left: Vec3,
    pub torque_right: Vec3,
    pub control_left: Vec3,
    pub control_right: Vec3,
}

impl ForceInputs {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn aero_torque(&self, wing: Wing) -> &Vec3 {
        match wing {
            Wing::Left => &self.torque_left,
            Wing::Right => &self.torque_right,
        }
    }

    pub fn control(&self, wing: Wing) -> &Vec3 {
        match wing {
            Wing::Left => &self.control_left,
            Wing::Right => &self.control_right,
        }
    }
}

impl Add for ForceInputs {
    type Output = ForceInputs;
    fn add(self, o: ForceInputs) -> ForceInputs {
        ForceInputs {
            force: self.force + o.force,
            torque_body: self.torque_body + o.torque_body,
            torque_left: self.torque_left + o.torque_left,
            torque_right: self.torque_right + o.torque_right,
            control_left: self.control_left + o.control_left,
            control_right: self.control_right + o.control_right,
        }
    }
}

/// Source of loads. Implementations must be deterministic functions of the
/// state (including `state.t`).
pub trait ForceProvider: Send + Sync {
    fn forces(&self, state: &ReducedState) -> ForceInputs;
}

impl<F> ForceProvider for F
where
    F: Fn(&ReducedState) -> ForceInputs + Send + Sync,
{
    fn forces(&self, state: &ReducedState) -> ForceInputs {
        self(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroForces;

impl ForceProvider for ZeroForces {
    fn forces(&self, _: &ReducedState) -> ForceInputs {
        ForceInputs::zero()
    }
}

/// Linear drag on every velocity slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDamping {
    c_lin: f64,
    c_rot: f64,
}

impl LinearDamping {
    pub fn new(c_lin: f64, c_rot: f64) -> Result<Self, ParamError> {
        if !(c_lin.is_finite() && c_lin >= 0.0) {
            return Err(ParamError::new("c_lin", format!("must be non-negative (got {c_lin})")));
        }
        if !(c_rot.is_finite() && c_rot >= 0.0) {
            return Err(ParamError::new("c_rot", format!("must be non-negative (got {c_rot})")));
        }
        Ok(LinearDamping { c_lin, c_rot })
    }

    pub fn c_lin(&self) -> f64 {
        self.c_lin
    }

    pub fn c_rot(&self) -> f64 {
        self.c_rot
    }
}

impl ForceProvider for LinearDamping {
    fn forces(&self, st: &ReducedState) -> ForceInputs {
        ForceInputs {
            force: -self.c_lin * st.z.v,
            torque_body: -self.c_rot * st.z.w_body,
            torque_left: -self.c_rot * st.z.w_left,
            torque_right: -self.c_rot * st.z.w_right,
            ..ForceInputs::zero()
        }
    }
}

/// The providers shipped with the library, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinForces {
    Zero,
    LinearDamping(LinearDamping),
}

impl ForceProvider for BuiltinForces {
    fn forces(&self, st: &ReducedState) -> ForceInputs {
        match self {
            BuiltinForces::Zero => ZeroForces.forces(st),
            BuiltinForces::LinearDamping(d) => d.forces(st),
        }
    }
}

/// Sinusoidal joint torques `A·sin(2π·f·t + φ_W)·axis_W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSpec {
    amplitude: f64,
    frequency: f64,
    phase: [f64; 2],
    axis: [Vec3; 2],
}

impl GaitSpec {
    /// `phase` and `axis` are ordered (left, right); axes are in wing frames.
    pub fn new(amplitude: f64, frequency: f64, phase: [f64; 2], axis: [Vec3; 2]) -> Result<Self, ParamError> {
        if !amplitude.is_finite() {
            return Err(ParamError::new("amplitude", "must be finite"));
        }
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(ParamError::new("frequency", format!("must be positive (got {frequency})")));
        }
        if phase.iter().any(|x| !x.is_finite()) {
            return Err(ParamError::new("phase", "must be finite"));
        }
        for (name, a) in ["axis_left", "axis_right"].iter().zip(&axis) {
            if !((a.norm() - 1.0).abs() <= 1e-9) {
                return Err(ParamError::new(*name, format!("must be a unit vector (norm {})", a.norm())));
            }
        }
        Ok(GaitSpec { amplitude, frequency, phase, axis })
    }

    /// No actuation.
    pub fn off() -> Self {
        GaitSpec { amplitude: 0.0, frequency: 1.0, phase: [0.0; 2], axis: [Vec3::x(); 2] }
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn phase(&self) -> [f64; 2] {
        self.phase
    }

    pub fn axis(&self) -> [Vec3; 2] {
        self.axis
    }

    /// Control torques `(T_cL, T_cR)` at time `t`.
    pub fn torque(&self, t: f64) -> (Vec3, Vec3) {
        let arg = TAU * self.frequency * t;
        let [l, r] = [0, 1].map(|k| self.amplitude * (arg + self.phase[k]).sin() * self.axis[k]);
        (l, r)
    }

    pub fn as_forces(&self, t: f64) -> ForceInputs {
        let (control_left, control_right) = self.torque(t);
        ForceInputs { control_left, control_right, ..ForceInputs::zero() }
    }
}

/// Provider loads plus gait torques at the state's time.
pub fn total_forces(provider: &dyn ForceProvider, gait: &GaitSpec, st: &ReducedState) -> ForceInputs {
    provider.forces(st) + gait.as_forces(st.t)
}

/// Time derivative of a [`ReducedState`] in momentum form. Rotations are
/// represented by their body-frame rates (`Ṙ = R·hat(ω)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    pub momenta: Momenta,
    pub gamma: Vec3,
    pub r: Vec3,
    pub position: Vec3,
    pub w_body: Vec3,
    pub w_left: Vec3,
    pub w_right: Vec3,
}

impl StateDerivative {
    pub fn attitude_rate(&self, st: &ReducedState) -> Mat3 {
        reconstruction_rhs(&st.attitude, &self.w_body)
    }

    pub fn wing_rate(&self, st: &ReducedState, wing: Wing) -> Mat3 {
        let w = match wing {
            Wing::Left => &self.w_left,
            Wing::Right => &self.w_right,
        };
        st.pose.shape.wing(wing).matrix() * hat(w)
    }
}

pub fn reduced_rhs(p: &InertialParams, st: &ReducedState, f: &ForceInputs) -> Result<StateDerivative, DynamicsError> {
    let pose = &st.pose;
    let z = &st.z;
    let mo = model::momenta(p, &pose.shape, z);
    let dr = model::dl_dr(p, pose);
    let dgamma = model::dl_dgamma(p, pose);

    let linear = mo.linear.cross(&z.w_body) + dr + f.force;
    let gravity_torque = if cfg!(feature = "sign-fault") {
        pose.r.cross(&dr) - dgamma.cross(&pose.gamma)
    } else {
        dgamma.cross(&pose.gamma) - pose.r.cross(&dr)
    };
    let body = mo.body.cross(&z.w_body) + mo.linear.cross(&z.v) + gravity_torque + f.torque_body;
    let [left, right] = Wing::BOTH
        .map(|w| mo.wing(w).cross(z.wing(w)) + model::shape_gradient(p, pose, z, w) + f.control(w) + f.aero_torque(w));

    Ok(StateDerivative {
        momenta: Momenta { linear, body, left, right },
        gamma: gamma_rhs(&z.w_body, &pose.gamma),
        r: z.v - z.w_body.cross(&pose.r),
        position: st.attitude * z.v,
        w_body: z.w_body,
        w_left: z.w_left,
        w_right: z.w_right,
    })
}

/// Solves `M(s)·Z = momenta` by Cholesky factorization.
pub fn solve_velocities(p: &InertialParams, s: &ShapeConfig, momenta: &Momenta) -> Result<VelocityZ, DynamicsError> {
    let m = model::assemble_mass_matrix(p, s);
    let chol = m.matrix().cholesky().ok_or(DynamicsError::SingularMass)?;
    Ok(VelocityZ::from_vector(&chol.solve(&momenta.to_vector())))
}

/// Advected gravity direction: `Γ̇ = −ω_B × Γ`.
pub fn gamma_rhs(w_body: &Vec3, gamma: &Vec3) -> Vec3 {
    -w_body.cross(gamma)
}

/// Reconstruction: `Ṙ_BI = R_BI·hat(ω_B)`.
pub fn reconstruction_rhs(attitude: &Rotation, w_body: &Vec3) -> Mat3 {
    attitude.matrix() * hat(w_body)
}
