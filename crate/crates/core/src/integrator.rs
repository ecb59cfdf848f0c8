//! Fixed-step integration of the reduced state.
//!
//! Momenta rather than velocities are integrated, so no time derivative of
//! the mass matrix is needed: every stage solves `M(s)·Z = momenta` for the
//! velocities. Two methods are provided:
//!
//! * [`Method::MuntheKaas4`]: classical RK4 tableau on the vector parts; each
//!   rotation is advanced as `R·exp(θ)` with stage increments pulled back
//!   through the inverse right Jacobian of exp.
//! * [`Method::Rk4Project`]: RK4 on raw matrix entries, then projection back
//!   onto SO(3). Kept as an independent cross-check.

use crate::dynamics::{self, ForceInputs, ForceProvider, GaitSpec, ReducedState, StateDerivative};
use crate::error::{DynamicsError, ParamError, SimError};
use crate::model::{self, InertialParams, Momenta, ReducedPose, ShapeConfig, Wing};
use crate::so3::{hat, project_so3, right_jacobian_inv, Mat3, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    MuntheKaas4,
    Rk4Project,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    dt: f64,
    method: Method,
    record_every: usize,
}

impl IntegratorConfig {
    pub const MAX_DT: f64 = 0.1;

    pub fn new(dt: f64, method: Method, record_every: usize) -> Result<Self, ParamError> {
        if !(dt > 0.0 && dt <= Self::MAX_DT) {
            return Err(ParamError::new("dt", format!("must lie in (0, {}] (got {dt})", Self::MAX_DT)));
        }
        if record_every == 0 {
            return Err(ParamError::new("record_every", "must be at least 1"));
        }
        Ok(IntegratorConfig { dt, method, record_every })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self, ParamError> {
        Self::new(dt, self.method, self.record_every)
    }
}

/// `max` that propagates NaN, so a NaN error never reads as a pass.
pub fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Conserved-quantity monitors for one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Total energy `T + V` (J), with `V` from inertial heights.
    pub energy: f64,
    /// Vertical component of the spatial angular momentum (kg·m²/s).
    pub pi_z: f64,
    /// `‖Γ‖ − 1`
    pub gamma_norm_err: f64,
    /// `‖Γ − R_BIᵀ·e_z‖`
    pub gamma_consistency: f64,
}

/// Spatial linear momentum `R_BI·p` and spatial angular momentum about the
/// inertial origin `R_BI·π_B + r_I × R_BI·p`.
pub fn spatial_momentum(p: &InertialParams, st: &ReducedState) -> (Vec3, Vec3) {
    let mo = model::momenta(p, &st.pose.shape, &st.z);
    let linear = st.attitude * mo.linear;
    let angular = st.attitude * mo.body + st.position.cross(&linear);
    (linear, angular)
}

pub fn diagnostics(p: &InertialParams, st: &ReducedState) -> Diagnostics {
    let g = p.gravity();
    let mut potential = p.total_mass() * g * st.position.z;
    for wing in Wing::BOTH {
        let w = p.wing(wing);
        potential += w.mass * g * (st.attitude * (st.pose.shape.wing(wing) * w.com_offset)).z;
    }
    let (_, angular) = spatial_momentum(p, st);
    Diagnostics {
        energy: model::kinetic_energy(p, &st.pose.shape, &st.z) + potential,
        pi_z: angular.z,
        gamma_norm_err: st.pose.gamma.norm() - 1.0,
        gamma_consistency: st.gamma_consistency(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: ReducedState,
    pub forces: ForceInputs,
    pub diagnostics: Diagnostics,
}

/// Uniformly spaced recorded states.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("a trajectory holds at least the initial sample")
    }

    /// `max |E(t) − E(0)| / |E(0)|`.
    pub fn energy_drift_rel(&self) -> f64 {
        self.drift(|d| d.energy)
    }

    pub fn pi_z_drift_rel(&self) -> f64 {
        self.drift(|d| d.pi_z)
    }

    pub fn gamma_norm_err_max(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.gamma_norm_err.abs()).fold(0.0, nan_max)
    }

    pub fn gamma_consistency_max(&self) -> f64 {
        self.samples.iter().map(|s| s.diagnostics.gamma_consistency).fold(0.0, nan_max)
    }

    /// Drift of the spatial `(linear, angular)` momentum vectors:
    /// `max ‖m(t) − m(0)‖ / ‖m(0)‖`, absolute when `m(0)` vanishes.
    pub fn momentum_drift_rel(&self, p: &InertialParams) -> (f64, f64) {
        let (l0, a0) = spatial_momentum(p, &self.samples[0].state);
        let scale = |n: f64| if n > 1e-12 { n } else { 1.0 };
        let (sl, sa) = (scale(l0.norm()), scale(a0.norm()));
        self.samples.iter().fold((0.0, 0.0), |(dl, da), s| {
            let (l, a) = spatial_momentum(p, &s.state);
            (nan_max(dl, (l - l0).norm() / sl), nan_max(da, (a - a0).norm() / sa))
        })
    }

    /// Largest deviation from the initial value, relative to it when the
    /// initial value is nonzero.
    fn drift(&self, f: impl Fn(&Diagnostics) -> f64) -> f64 {
        let x0 = f(&self.samples[0].diagnostics);
        let scale = if x0.abs() > 1e-12 { x0.abs() } else { 1.0 };
        self.samples.iter().map(|s| (f(&s.diagnostics) - x0).abs() / scale).fold(0.0, nan_max)
    }
}

/// Integration variables: momenta instead of velocities.
#[derive(Debug, Clone, Copy)]
struct Phase {
    momenta: Momenta,
    gamma: Vec3,
    r: Vec3,
    position: Vec3,
    attitude: Rotation,
    left: Rotation,
    right: Rotation,
    t: f64,
}

impl Phase {
    fn from_state(p: &InertialParams, st: &ReducedState) -> Self {
        Phase {
            momenta: model::momenta(p, &st.pose.shape, &st.z),
            gamma: st.pose.gamma,
            r: st.pose.r,
            position: st.position,
            attitude: st.attitude,
            left: st.pose.shape.left,
            right: st.pose.shape.right,
            t: st.t,
        }
    }

    fn state(&self, p: &InertialParams) -> Result<ReducedState, DynamicsError> {
        let shape = ShapeConfig { left: self.left, right: self.right };
        let z = dynamics::solve_velocities(p, &shape, &self.momenta)?;
        Ok(ReducedState {
            pose: ReducedPose { r: self.r, gamma: self.gamma, shape },
            z,
            attitude: self.attitude,
            position: self.position,
            t: self.t,
        })
    }

    /// Vector parts advanced by `Σ wᵢ·dt·kᵢ`; rotations are left untouched.
    fn advance_vectors(&self, dt: f64, terms: &[(f64, &StateDerivative)], t: f64) -> Phase {
        let mut out = *self;
        let mut mo = self.momenta.to_vector();
        for (w, d) in terms {
            let h = w * dt;
            mo += h * d.momenta.to_vector();
            out.gamma += h * d.gamma;
            out.r += h * d.r;
            out.position += h * d.position;
        }
        out.momenta = Momenta::from_vector(&mo);
        out.t = t;
        out
    }
}

fn evaluate(
    p: &InertialParams,
    phase: &Phase,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
) -> Result<(ReducedState, StateDerivative), DynamicsError> {
    let st = phase.state(p)?;
    let f = dynamics::total_forces(provider, gait, &st);
    let d = dynamics::reduced_rhs(p, &st, &f)?;
    Ok((st, d))
}

const RK4_NODES: [f64; 4] = [0.0, 0.5, 0.5, 1.0];
const RK4_WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

/// Advances one fixed step.
pub fn step(
    p: &InertialParams,
    st: &ReducedState,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    cfg: &IntegratorConfig,
) -> Result<ReducedState, DynamicsError> {
    let y0 = Phase::from_state(p, st);
    let next = match cfg.method {
        Method::MuntheKaas4 => step_munthe_kaas(p, &y0, provider, gait, cfg.dt)?,
        Method::Rk4Project => step_rk4_project(p, &y0, provider, gait, cfg.dt)?,
    };
    next.state(p)
}

fn step_munthe_kaas(
    p: &InertialParams,
    y0: &Phase,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    dt: f64,
) -> Result<Phase, DynamicsError> {
    let rotations = |y: &Phase| [y.attitude, y.left, y.right];
    let rates = |d: &StateDerivative| [d.w_body, d.w_left, d.w_right];

    let mut derivs: Vec<StateDerivative> = Vec::with_capacity(4);
    // algebra increments K_i = dexp⁻¹(θ_i)·ω_i
    let mut incs: Vec<[Vec3; 3]> = Vec::with_capacity(4);
    for stage in 0..4 {
        let c = RK4_NODES[stage];
        let (mut y, thetas) = if stage == 0 {
            (*y0, [Vec3::zeros(); 3])
        } else {
            let prev = &derivs[stage - 1];
            let thetas = incs[stage - 1].map(|k| c * dt * k);
            (y0.advance_vectors(dt, &[(c, prev)], y0.t + c * dt), thetas)
        };
        let r0 = rotations(y0);
        y.attitude = r0[0].retract(&thetas[0]);
        y.left = r0[1].retract(&thetas[1]);
        y.right = r0[2].retract(&thetas[2]);
        let (_, d) = evaluate(p, &y, provider, gait)?;
        let w = rates(&d);
        incs.push([0, 1, 2].map(|k| right_jacobian_inv(&thetas[k]) * w[k]));
        derivs.push(d);
    }

    let terms: Vec<(f64, &StateDerivative)> = RK4_WEIGHTS.iter().copied().zip(derivs.iter()).collect();
    let mut y = y0.advance_vectors(dt, &terms, y0.t + dt);
    let theta = [0, 1, 2].map(|k| dt * (0..4).map(|s| RK4_WEIGHTS[s] * incs[s][k]).sum::<Vec3>());
    let r0 = rotations(y0);
    y.attitude = r0[0].retract(&theta[0]);
    y.left = r0[1].retract(&theta[1]);
    y.right = r0[2].retract(&theta[2]);
    Ok(y)
}

fn step_rk4_project(
    p: &InertialParams,
    y0: &Phase,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    dt: f64,
) -> Result<Phase, DynamicsError> {
    let mats = |y: &Phase| [*y.attitude.matrix(), *y.left.matrix(), *y.right.matrix()];
    let r0 = mats(y0);
    let mut derivs: Vec<StateDerivative> = Vec::with_capacity(4);
    let mut mat_rates: Vec<[Mat3; 3]> = Vec::with_capacity(4);
    for stage in 0..4 {
        let c = RK4_NODES[stage];
        let mut y = if stage == 0 { *y0 } else { y0.advance_vectors(dt, &[(c, &derivs[stage - 1])], y0.t + c * dt) };
        if stage > 0 {
            let prev = &mat_rates[stage - 1];
            let m = [0, 1, 2].map(|k| r0[k] + c * dt * prev[k]);
            // intermediate stages are not orthogonal; that is fine for RK4
            y.attitude = Rotation::from_matrix_unchecked(m[0]);
            y.left = Rotation::from_matrix_unchecked(m[1]);
            y.right = Rotation::from_matrix_unchecked(m[2]);
        }
        let (_, d) = evaluate(p, &y, provider, gait)?;
        let m = mats(&y);
        mat_rates.push([m[0] * hat(&d.w_body), m[1] * hat(&d.w_left), m[2] * hat(&d.w_right)]);
        derivs.push(d);
    }
    let terms: Vec<(f64, &StateDerivative)> = RK4_WEIGHTS.iter().copied().zip(derivs.iter()).collect();
    let mut y = y0.advance_vectors(dt, &terms, y0.t + dt);
    let next = [0, 1, 2].map(|k| r0[k] + dt * (0..4).map(|s| RK4_WEIGHTS[s] * mat_rates[s][k]).sum::<Mat3>());
    y.attitude = project_so3(&next[0])?;
    y.left = project_so3(&next[1])?;
    y.right = project_so3(&next[2])?;
    Ok(y)
}

/// Number of fixed steps covering `duration` (at least one).
pub fn step_count(duration: f64, dt: f64) -> usize {
    ((duration / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates from `st0` for `duration` seconds, recording every
/// `record_every`-th step plus the initial state.
pub fn simulate(
    p: &InertialParams,
    st0: &ReducedState,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    cfg: &IntegratorConfig,
    duration: f64,
) -> Result<Trajectory, SimError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(SimError::Invalid(format!("duration must be positive (got {duration})")));
    }
    if !st0.is_finite() {
        return Err(SimError::NonFinite { step: 0 });
    }
    let n = step_count(duration, cfg.dt);
    let record = |st: &ReducedState| Sample {
        t: st.t,
        state: *st,
        forces: dynamics::total_forces(provider, gait, st),
        diagnostics: diagnostics(p, st),
    };
    let mut samples = Vec::with_capacity(n / cfg.record_every + 2);
    samples.push(record(st0));
    let mut st = *st0;
    for k in 1..=n {
        st = step(p, &st, provider, gait, cfg)?;
        // step times are kept on the grid to avoid accumulating round-off
        st.t = st0.t + k as f64 * cfg.dt;
        if !st.is_finite() || !st.z.v.iter().chain(st.pose.r.iter()).all(|x| x.abs() < 1e150) {
            return Err(SimError::NonFinite { step: k });
        }
        if k % cfg.record_every == 0 {
            samples.push(record(&st));
        }
    }
    Ok(Trajectory { samples, steps: n })
}
