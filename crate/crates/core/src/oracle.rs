//! Brute-force verification of the reduced equations.
//!
//! The unreduced Lagrangian is written in local coordinates
//! `q = (θ_B, r_I, θ_L, θ_R)` with `R = R⁰·exp(θ)` for each rotation, and
//! evaluated straight from the frame kinematics: the inertial velocity of the
//! hinge, and each body's angular velocity read off `RᵀṘ`. None of the
//! mass-matrix or gradient code in [`crate::model`] is used here. The
//! Euler-Lagrange equations are then formed entirely by finite differences of
//! that scalar function.

use nalgebra::Cholesky;

use crate::dynamics::{self, ForceInputs, ForceProvider, GaitSpec, ReducedState};
use crate::error::{OracleError, SimError};
use crate::integrator::{self, Sample, Trajectory};
use crate::model::{InertialParams, Matrix12, Vector12, VelocityZ, Wing};
use crate::so3::{exp_so3, right_jacobian, skew_part, Mat3, Rotation, Vec3};

/// Step for differences in `q`.
pub const FD_STEP: f64 = 1e-6;

/// Re-center once any rotation coordinate exceeds this norm.
pub const RECENTER_NORM: f64 = 1.0;

const CHART_LIMIT: f64 = std::f64::consts::FRAC_PI_2;

/// The Lagrangian is exactly quadratic in `q̇`, so differences in `q̇` are
/// exact for any step; a unit step keeps round-off minimal.
const VELOCITY_STEP: f64 = 1.0;

const BLOCKS: [(&str, usize); 3] = [("torso", 0), ("left_wing", 6), ("right_wing", 9)];

/// Reference rotations for exponential coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub attitude: Rotation,
    pub left: Rotation,
    pub right: Rotation,
}

impl Chart {
    fn references(&self) -> [&Rotation; 3] {
        [&self.attitude, &self.left, &self.right]
    }
}

fn block(x: &Vector12, at: usize) -> Vec3 {
    x.fixed_rows::<3>(at).into_owned()
}

/// Rotations and exp-coordinate Jacobians at a fixed `q`.
struct ChartPoint {
    rotations: [Mat3; 3],
    jacobians: [Mat3; 3],
    position: Vec3,
}

impl ChartPoint {
    fn new(chart: &Chart, q: &Vector12) -> Result<Self, OracleError> {
        let mut rotations = [Mat3::zeros(); 3];
        let mut jacobians = [Mat3::zeros(); 3];
        for (k, ((name, at), r0)) in BLOCKS.iter().zip(chart.references()).enumerate() {
            let theta = block(q, *at);
            let norm = theta.norm();
            if !(norm < CHART_LIMIT) {
                return Err(OracleError::ChartOverflow { block: name, norm });
            }
            rotations[k] = r0.matrix() * exp_so3(&theta).matrix();
            jacobians[k] = right_jacobian(&theta);
        }
        Ok(ChartPoint { rotations, jacobians, position: block(q, 3) })
    }

    /// `Ṙ = R·hat(J_r(θ)·θ̇)` for each rotation block.
    fn rotation_rates(&self, qdot: &Vector12) -> [Mat3; 3] {
        let mut out = [Mat3::zeros(); 3];
        for (k, (_, at)) in BLOCKS.iter().enumerate() {
            let w = self.jacobians[k] * block(qdot, *at);
            out[k] = self.rotations[k] * crate::so3::hat(&w);
        }
        out
    }

    fn kinetic(&self, p: &InertialParams, qdot: &Vector12) -> f64 {
        let [rb, rl, rr] = &self.rotations;
        let [db, dl, dr] = self.rotation_rates(qdot);
        let hinge_speed2 = block(qdot, 3).norm_squared();

        let body = p.body();
        let omega_b = skew_part(&(rb.transpose() * db));
        let mut t = 0.5 * body.mass * hinge_speed2 + 0.5 * omega_b.dot(&(body.inertia * omega_b));

        for (wing, rw, dw) in [(Wing::Left, rl, dl), (Wing::Right, rr, dr)] {
            let w = p.wing(wing);
            // absolute wing attitude R_BI·R_WB and its rate
            let abs = rb * rw;
            let abs_rate = db * rw + rb * dw;
            let omega = skew_part(&(abs.transpose() * abs_rate));
            t += 0.5 * w.mass * hinge_speed2 + 0.5 * omega.dot(&(w.inertia * omega));
        }
        t
    }

    fn potential(&self, p: &InertialParams) -> f64 {
        let g = p.gravity();
        let [rb, rl, rr] = &self.rotations;
        let mut v = p.body().mass * g * self.position.z;
        for (wing, rw) in [(Wing::Left, rl), (Wing::Right, rr)] {
            let w = p.wing(wing);
            let com = self.position + rb * (rw * w.com_offset);
            v += w.mass * g * com.z;
        }
        v
    }

    fn lagrangian(&self, p: &InertialParams, qdot: &Vector12) -> f64 {
        self.kinetic(p, qdot) - self.potential(p)
    }

    /// `Z = (R_BIᵀ ṙ_I, ω_B, ω_WL, ω_WR)`; linear in `q̇`.
    fn velocity_z(&self, qdot: &Vector12) -> VelocityZ {
        VelocityZ {
            v: self.rotations[0].transpose() * block(qdot, 3),
            w_body: self.jacobians[0] * block(qdot, 0),
            w_left: self.jacobians[1] * block(qdot, 6),
            w_right: self.jacobians[2] * block(qdot, 9),
        }
    }
}

/// Unreduced Lagrangian `L = T − V` in chart coordinates.
pub fn full_lagrangian(p: &InertialParams, chart: &Chart, q: &Vector12, qdot: &Vector12) -> Result<f64, OracleError> {
    Ok(ChartPoint::new(chart, q)?.lagrangian(p, qdot))
}

/// Generalized momentum `∂L/∂q̇` by central differences.
fn momentum(p: &InertialParams, pt: &ChartPoint, qdot: &Vector12) -> Vector12 {
    let s = VELOCITY_STEP;
    Vector12::from_fn(|i, _| {
        let mut plus = *qdot;
        let mut minus = *qdot;
        plus[i] += s;
        minus[i] -= s;
        (pt.lagrangian(p, &plus) - pt.lagrangian(p, &minus)) / (2.0 * s)
    })
}

/// Solves `A(q)·q̈ = ∂L/∂q − (∂²L/∂q̇∂q)·q̇ + Q` with every derivative taken
/// numerically from [`full_lagrangian`]. `Q` maps the force inputs through
/// the velocity Jacobian `∂Z/∂q̇`.
pub fn oracle_accel(
    p: &InertialParams,
    chart: &Chart,
    q: &Vector12,
    qdot: &Vector12,
    forces: &ForceInputs,
) -> Result<Vector12, OracleError> {
    let pt = ChartPoint::new(chart, q)?;

    // A = ∂²L/∂q̇²: second differences of a quadratic are exact
    let s = VELOCITY_STEP;
    let zero = Vector12::zeros();
    let l0 = pt.lagrangian(p, &zero);
    let unit = |i: usize| Vector12::ith(i, s);
    let li: Vec<f64> = (0..12).map(|i| pt.lagrangian(p, &unit(i))).collect();
    let mut a = Matrix12::zeros();
    for i in 0..12 {
        a[(i, i)] = 2.0 * (li[i] - l0) / (s * s);
        for j in 0..i {
            let lij = pt.lagrangian(p, &(unit(i) + unit(j)));
            let v = (lij - li[i] - li[j] + l0) / (s * s);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }

    let h = FD_STEP;
    let dl_dq = {
        let mut g = Vector12::zeros();
        for i in 0..12 {
            let lp = ChartPoint::new(chart, &(q + Vector12::ith(i, h)))?.lagrangian(p, qdot);
            let lm = ChartPoint::new(chart, &(q - Vector12::ith(i, h)))?.lagrangian(p, qdot);
            g[i] = (lp - lm) / (2.0 * h);
        }
        g
    };

    // (∂p/∂q)·q̇ as one directional difference along q̇
    let transport = {
        let pp = momentum(p, &ChartPoint::new(chart, &(q + h * qdot))?, qdot);
        let pm = momentum(p, &ChartPoint::new(chart, &(q - h * qdot))?, qdot);
        (pp - pm) / (2.0 * h)
    };

    let generalized = {
        let f = forces;
        let fz = Vector12::from_iterator(
            [f.force, f.torque_body, f.torque_left + f.control_left, f.torque_right + f.control_right]
                .iter()
                .flat_map(|v| v.iter().copied()),
        );
        // ∂Z/∂q̇ column by column (Z is linear in q̇)
        let mut jac = Matrix12::zeros();
        for j in 0..12 {
            jac.set_column(j, &velocity_vector(&pt.velocity_z(&Vector12::ith(j, 1.0))));
        }
        jac.transpose() * fz
    };

    let rhs = dl_dq - transport + generalized;
    let chol = Cholesky::new(a).ok_or(OracleError::SingularMass)?;
    Ok(chol.solve(&rhs))
}

fn velocity_vector(z: &VelocityZ) -> Vector12 {
    z.to_vector()
}

/// Oracle integration state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleState {
    pub chart: Chart,
    pub q: Vector12,
    pub qdot: Vector12,
    pub t: f64,
}

impl OracleState {
    /// Chart centered on the given state, so all angle coordinates start at
    /// zero and their rates equal the body-frame angular velocities.
    pub fn from_reduced(st: &ReducedState) -> Self {
        let chart = Chart { attitude: st.attitude, left: st.pose.shape.left, right: st.pose.shape.right };
        let mut q = Vector12::zeros();
        q.fixed_rows_mut::<3>(3).copy_from(&st.position);
        let mut qdot = Vector12::zeros();
        qdot.fixed_rows_mut::<3>(0).copy_from(&st.z.w_body);
        qdot.fixed_rows_mut::<3>(3).copy_from(&(st.attitude * st.z.v));
        qdot.fixed_rows_mut::<3>(6).copy_from(&st.z.w_left);
        qdot.fixed_rows_mut::<3>(9).copy_from(&st.z.w_right);
        OracleState { chart, q, qdot, t: st.t }
    }

    /// The physical state in reduced form (`Γ` and `r` derived from `R_BI`).
    pub fn to_reduced(&self) -> Result<ReducedState, OracleError> {
        let pt = ChartPoint::new(&self.chart, &self.q)?;
        let [rb, rl, rr] = pt.rotations.map(Rotation::from_matrix_unchecked);
        let shape = crate::model::ShapeConfig { left: rl, right: rr };
        Ok(ReducedState::new(rb, pt.position, shape, pt.velocity_z(&self.qdot), self.t))
    }

    pub fn max_angle(&self) -> f64 {
        BLOCKS.iter().map(|(_, at)| block(&self.q, *at).norm()).fold(0.0, f64::max)
    }

    /// Moves every reference rotation to the current attitude, zeroing the
    /// angle coordinates. Angle rates become the body-frame angular
    /// velocities, so the physical state is unchanged.
    pub fn recenter(&mut self) {
        let refs = [&mut self.chart.attitude, &mut self.chart.left, &mut self.chart.right];
        for ((_, at), r0) in BLOCKS.iter().zip(refs) {
            let theta = block(&self.q, *at);
            let rate = right_jacobian(&theta) * block(&self.qdot, *at);
            *r0 = r0.retract(&theta);
            self.q.fixed_rows_mut::<3>(*at).fill(0.0);
            self.qdot.fixed_rows_mut::<3>(*at).copy_from(&rate);
        }
    }
}

fn oracle_forces(provider: &dyn ForceProvider, gait: &GaitSpec, st: &OracleState) -> Result<ForceInputs, OracleError> {
    Ok(dynamics::total_forces(provider, gait, &st.to_reduced()?))
}

fn oracle_derivative(
    p: &InertialParams,
    st: &OracleState,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
) -> Result<(Vector12, Vector12), OracleError> {
    let f = oracle_forces(provider, gait, st)?;
    Ok((st.qdot, oracle_accel(p, &st.chart, &st.q, &st.qdot, &f)?))
}

/// One classical RK4 step on `(q, q̇)`.
pub fn oracle_step(
    p: &InertialParams,
    st: &OracleState,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    dt: f64,
) -> Result<OracleState, OracleError> {
    let shifted = |k: &(Vector12, Vector12), c: f64| OracleState {
        q: st.q + c * dt * k.0,
        qdot: st.qdot + c * dt * k.1,
        t: st.t + c * dt,
        ..*st
    };
    let k1 = oracle_derivative(p, st, provider, gait)?;
    let k2 = oracle_derivative(p, &shifted(&k1, 0.5), provider, gait)?;
    let k3 = oracle_derivative(p, &shifted(&k2, 0.5), provider, gait)?;
    let k4 = oracle_derivative(p, &shifted(&k3, 1.0), provider, gait)?;
    Ok(OracleState {
        q: st.q + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        qdot: st.qdot + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        t: st.t + dt,
        ..*st
    })
}

/// Integrates the unreduced equations from the same initial state as the
/// reduced path, re-centering the chart whenever an angle coordinate
/// exceeds [`RECENTER_NORM`].
pub fn oracle_simulate(
    p: &InertialParams,
    st0: &ReducedState,
    provider: &dyn ForceProvider,
    gait: &GaitSpec,
    dt: f64,
    duration: f64,
    record_every: usize,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0 && duration > 0.0 && record_every > 0) {
        return Err(SimError::Invalid("oracle run needs dt > 0, duration > 0, record_every ≥ 1".into()));
    }
    let n = integrator::step_count(duration, dt);
    let record = |os: &OracleState| -> Result<Sample, SimError> {
        let st = os.to_reduced()?;
        Ok(Sample {
            t: st.t,
            state: st,
            forces: dynamics::total_forces(provider, gait, &st),
            diagnostics: integrator::diagnostics(p, &st),
        })
    };
    let mut os = OracleState::from_reduced(st0);
    let mut samples = vec![record(&os)?];
    for k in 1..=n {
        os = oracle_step(p, &os, provider, gait, dt)?;
        os.t = st0.t + k as f64 * dt;
        if !(os.q.iter().chain(os.qdot.iter()).all(|x| x.is_finite())) {
            return Err(SimError::NonFinite { step: k });
        }
        if os.max_angle() > RECENTER_NORM {
            os.recenter();
        }
        if k % record_every == 0 {
            samples.push(record(&os)?);
        }
    }
    Ok(Trajectory { samples, steps: n })
}

/// Maximum relative error of an analytic gradient against central
/// differences of `f`, normalized by `max(1, ‖analytic‖)`.
pub fn fd_check(f: impl Fn(&[f64]) -> f64, point: &[f64], analytic: &[f64]) -> f64 {
    assert_eq!(point.len(), analytic.len(), "gradient length must match the point");
    let scale = analytic.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let mut x = point.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..point.len() {
        x[i] = point[i] + FD_STEP;
        let fp = f(&x);
        x[i] = point[i] - FD_STEP;
        let fm = f(&x);
        x[i] = point[i];
        let fd = (fp - fm) / (2.0 * FD_STEP);
        worst = integrator::nan_max(worst, (fd - analytic[i]).abs() / scale);
    }
    worst
}

/// Per-partial gradient errors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialErrors {
    pub momenta: f64,
    pub dl_dr: f64,
    pub dl_dgamma: f64,
    pub shape_left: f64,
    pub shape_right: f64,
}

impl PartialErrors {
    pub fn max(&self) -> f64 {
        [self.momenta, self.dl_dr, self.dl_dgamma, self.shape_left, self.shape_right]
            .into_iter()
            .fold(0.0, integrator::nan_max)
    }
}

/// Checks every analytic partial of the reduced Lagrangian with [`fd_check`].
pub fn check_model_partials(p: &InertialParams, pose: &crate::model::ReducedPose, z: &VelocityZ) -> PartialErrors {
    use crate::model::{dl_dgamma, dl_dr, momenta, reduced_lagrangian, shape_gradient};

    let v3 = |x: &[f64]| Vec3::new(x[0], x[1], x[2]);
    let momenta_err = fd_check(
        |x| reduced_lagrangian(p, pose, &VelocityZ::from_vector(&Vector12::from_column_slice(x))),
        z.to_vector().as_slice(),
        momenta(p, &pose.shape, z).to_vector().as_slice(),
    );
    let dr = fd_check(
        |x| reduced_lagrangian(p, &crate::model::ReducedPose { r: v3(x), ..*pose }, z),
        pose.r.as_slice(),
        dl_dr(p, pose).as_slice(),
    );
    // Γ is varied freely in R³ here; the partial is the ambient gradient
    let dg = fd_check(
        |x| reduced_lagrangian(p, &crate::model::ReducedPose { gamma: v3(x), ..*pose }, z),
        pose.gamma.as_slice(),
        dl_dgamma(p, pose).as_slice(),
    );
    let shape = |wing: Wing| {
        fd_check(
            |x| {
                let mut moved = *pose;
                *moved.shape.wing_mut(wing) = pose.shape.wing(wing).retract(&v3(x));
                reduced_lagrangian(p, &moved, z)
            },
            &[0.0; 3],
            shape_gradient(p, pose, z, wing).as_slice(),
        )
    };
    PartialErrors {
        momenta: momenta_err,
        dl_dr: dr,
        dl_dgamma: dg,
        shape_left: shape(Wing::Left),
        shape_right: shape(Wing::Right),
    }
}

/// Names of the state groups compared by [`state_errors`].
pub const STATE_GROUPS: [&str; 8] =
    ["position", "attitude", "left_wing", "right_wing", "v", "w_body", "w_left", "w_right"];

/// Relative error per state group, `‖a − b‖ / max(1, ‖b‖)` with `b` the
/// reference. Rotations are compared as matrices (Frobenius norm).
pub fn state_errors(a: &ReducedState, b: &ReducedState) -> [f64; 8] {
    fn rel(d: f64, n: f64) -> f64 {
        d / n.max(1.0)
    }
    let rot = |x: &Rotation, y: &Rotation| rel((x.matrix() - y.matrix()).norm(), y.matrix().norm());
    let vec = |x: &Vec3, y: &Vec3| rel((x - y).norm(), y.norm());
    [
        vec(&a.position, &b.position),
        rot(&a.attitude, &b.attitude),
        rot(&a.pose.shape.left, &b.pose.shape.left),
        rot(&a.pose.shape.right, &b.pose.shape.right),
        vec(&a.z.v, &b.z.v),
        vec(&a.z.w_body, &b.z.w_body),
        vec(&a.z.w_left, &b.z.w_left),
        vec(&a.z.w_right, &b.z.w_right),
    ]
}

/// Worst relative error between two trajectories sampled on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Per recorded sample: time and the [`STATE_GROUPS`] errors.
    pub series: Vec<(f64, [f64; 8])>,
    pub max_error: f64,
    pub worst_group: &'static str,
    pub worst_time: f64,
}

pub fn compare(reduced: &Trajectory, oracle: &Trajectory) -> Comparison {
    let mut series = Vec::with_capacity(reduced.samples.len());
    let (mut max_error, mut worst_group, mut worst_time) = (0.0, STATE_GROUPS[0], 0.0);
    for (a, b) in reduced.samples.iter().zip(&oracle.samples) {
        let e = state_errors(&a.state, &b.state);
        for (k, x) in e.iter().enumerate() {
            if *x > max_error || x.is_nan() {
                max_error = if x.is_nan() { f64::INFINITY } else { *x };
                worst_group = STATE_GROUPS[k];
                worst_time = a.t;
            }
        }
        series.push((a.t, e));
    }
    Comparison { series, max_error, worst_group, worst_time }
}
