//! Reduced dynamics of a flapping-wing micro aerial vehicle.
//!
//! The vehicle is a rigid torso with two rigid wings hinged at the torso
//! center of mass. Its Lagrangian is invariant under rotations of the whole
//! vehicle about the vertical, so the dynamics are written in torso
//! coordinates: Euler-Poincaré equations for the torso translation and
//! rotation, Euler-Lagrange equations on SO(3) for each wing, the gravity
//! direction `Γ = R_BIᵀ e_z` carried as an advected vector, and the torso
//! attitude recovered from `Ṙ_BI = R_BI·hat(ω_B)`.
//!
//! * [`so3`]: rotation group primitives.
//! * [`model`]: parameters, mass matrix, reduced Lagrangian and its partials.
//! * [`dynamics`]: forced equations of motion and force providers.
//! * [`integrator`]: fixed-step Lie group integration and diagnostics.
//! * [`oracle`]: an independent full-coordinate Lagrangian implementation
//!   differentiated numerically, used to certify the reduced path.

// `!(x <= tol)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod model;
pub mod oracle;
pub mod sampling;
pub mod so3;

pub use dynamics::{ForceInputs, ForceProvider, GaitSpec, LinearDamping, ReducedState, ZeroForces};
pub use error::{DynamicsError, OracleError, ParamError, SimError, So3Error};
pub use integrator::{IntegratorConfig, Method, Trajectory};
pub use model::{InertialParams, ReducedPose, ShapeConfig, VelocityZ, Wing};
pub use so3::{Mat3, Rotation, Vec3};
