//! Property suites behind `fwmav check`.
//!
//! Every suite measures one or more worst-case errors and compares them to a
//! fixed tolerance. Conservation suites run the configured vehicle from its
//! configured initial state over at most [`HORIZON`] seconds; the model and
//! oracle suites add seeded random vehicles and states.

use fwmav::dynamics::BuiltinForces;
use fwmav::integrator::{nan_max, simulate};
use fwmav::oracle::{check_model_partials, compare, full_lagrangian, oracle_simulate};
use fwmav::{model, sampling, GaitSpec, InertialParams, ReducedState, SimError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Run;

pub const SUITES: [&str; 6] = ["lagrangian", "gradcheck", "oracle", "energy", "symmetry", "advected"];

/// Longest simulated span in the conservation suites (s).
pub const HORIZON: f64 = 1.0;
/// Span of the oracle comparison from the configured state (s).
pub const ORACLE_HORIZON: f64 = 0.1;
/// Oracle comparisons always run at this step (s).
pub const ORACLE_DT: f64 = 1e-4;

const LAGRANGIAN_DRAWS: usize = 200;
const GRADIENT_POINTS: usize = 40;
const RANDOM_ORACLE_RUNS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub suite: &'static str,
    pub property: String,
    pub measured: f64,
    pub tolerance: f64,
}

impl Row {
    fn new(suite: &'static str, property: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Row { suite, property: property.into(), measured, tolerance }
    }

    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }
}

/// Runs one named suite.
pub fn run_suite(name: &str, run: &Run, seed: u64) -> Result<Vec<Row>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "lagrangian" => Ok(lagrangian(run, &mut rng)),
        "gradcheck" => Ok(gradcheck(run, &mut rng)),
        "oracle" => oracle(run, &mut rng),
        "energy" => energy(run),
        "symmetry" => symmetry(run),
        "advected" => advected(run),
        other => Err(SimError::Invalid(format!("unknown suite {other:?}"))),
    }
}

/// Runs the selected suites concurrently; rows come back in suite order.
pub fn run_suites(names: &[&str], run: &Run, seed: u64) -> Vec<(&'static str, Result<Vec<Row>, SimError>)> {
    let selected: Vec<&'static str> = SUITES.iter().copied().filter(|s| names.contains(s)).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            selected.iter().map(|name| (*name, scope.spawn(move || run_suite(name, run, seed)))).collect();
        handles.into_iter().map(|(name, h)| (name, h.join().expect("suite thread panicked"))).collect()
    })
}

fn lagrangian(run: &Run, rng: &mut ChaCha8Rng) -> Vec<Row> {
    let mut worst: f64 = 0.0;
    for k in 0..LAGRANGIAN_DRAWS {
        let p = if k % 2 == 0 { run.params } else { sampling::random_params(rng) };
        let os = sampling::random_chart_state(rng, 3.0);
        let st = os.to_reduced().expect("sampled chart coordinates are in range");
        let full = full_lagrangian(&p, &os.chart, &os.q, &os.qdot).expect("sampled chart coordinates are in range");
        let reduced = model::reduced_lagrangian(&p, &st.pose, &st.z);
        worst = nan_max(worst, (full - reduced).abs() / reduced.abs().max(1.0));
    }
    vec![Row::new("lagrangian", format!("reduced vs full Lagrangian, {LAGRANGIAN_DRAWS} states"), worst, 1e-10)]
}

fn gradcheck(run: &Run, rng: &mut ChaCha8Rng) -> Vec<Row> {
    let mut worst = [0.0f64; 5];
    for k in 0..GRADIENT_POINTS {
        let p = if k % 2 == 0 { run.params } else { sampling::random_params(rng) };
        let pose = sampling::random_pose(rng);
        let z = sampling::random_velocity(rng, 3.0);
        let e = check_model_partials(&p, &pose, &z);
        for (w, x) in worst.iter_mut().zip([e.momenta, e.dl_dr, e.dl_dgamma, e.shape_left, e.shape_right]) {
            *w = nan_max(*w, x);
        }
    }
    ["momenta", "dl/dr", "dl/dGamma", "shape gradient (left)", "shape gradient (right)"]
        .iter()
        .zip(worst)
        .map(|(name, x)| Row::new("gradcheck", format!("{name}, {GRADIENT_POINTS} points"), x, 1e-6))
        .collect()
}

fn oracle_error(
    p: &InertialParams,
    st: &ReducedState,
    forces: &BuiltinForces,
    gait: &GaitSpec,
    duration: f64,
) -> Result<f64, SimError> {
    let cfg = fwmav::IntegratorConfig::new(ORACLE_DT, fwmav::Method::MuntheKaas4, 10).map_err(invalid)?;
    let reduced = simulate(p, st, forces, gait, &cfg, duration)?;
    let oracle = oracle_simulate(p, st, forces, gait, ORACLE_DT, duration, 10)?;
    Ok(compare(&reduced, &oracle).max_error)
}

fn oracle(run: &Run, rng: &mut ChaCha8Rng) -> Result<Vec<Row>, SimError> {
    let horizon = run.duration.min(ORACLE_HORIZON);
    let configured = oracle_error(&run.params, &run.initial, &run.forces, &run.gait, horizon)?;
    let mut random: f64 = 0.0;
    for _ in 0..RANDOM_ORACLE_RUNS {
        let p = sampling::random_params(rng);
        let st = sampling::random_state(rng, 3.0);
        let gait = sampling::random_gait(rng);
        random = nan_max(random, oracle_error(&p, &st, &BuiltinForces::Zero, &gait, 0.5 * ORACLE_HORIZON)?);
    }
    Ok(vec![
        Row::new("oracle", format!("configured run vs oracle, {horizon} s"), configured, 1e-4),
        Row::new("oracle", format!("{RANDOM_ORACLE_RUNS} random gait runs vs oracle"), random, 1e-4),
    ])
}

fn invalid(e: fwmav::ParamError) -> SimError {
    SimError::Invalid(e.to_string())
}

fn horizon(run: &Run) -> f64 {
    run.duration.min(HORIZON)
}

fn energy(run: &Run) -> Result<Vec<Row>, SimError> {
    let traj =
        simulate(&run.params, &run.initial, &BuiltinForces::Zero, &GaitSpec::off(), &run.integrator, horizon(run))?;
    Ok(vec![Row::new("energy", "energy drift, unforced (relative)", traj.energy_drift_rel(), 1e-6)])
}

fn symmetry(run: &Run) -> Result<Vec<Row>, SimError> {
    let t = horizon(run);
    let traj = simulate(&run.params, &run.initial, &BuiltinForces::Zero, &run.gait, &run.integrator, t)?;
    let free = run.params.with_gravity(0.0).map_err(invalid)?;
    let (lin, ang) =
        simulate(&free, &run.initial, &BuiltinForces::Zero, &run.gait, &run.integrator, t)?.momentum_drift_rel(&free);
    Ok(vec![
        Row::new("symmetry", "pi_z drift, gait on (relative)", traj.pi_z_drift_rel(), 1e-6),
        Row::new("symmetry", "linear momentum drift, g = 0", lin, 1e-6),
        Row::new("symmetry", "angular momentum drift, g = 0", ang, 1e-6),
    ])
}

fn advected(run: &Run) -> Result<Vec<Row>, SimError> {
    let traj = simulate(&run.params, &run.initial, &run.forces, &run.gait, &run.integrator, horizon(run))?;
    Ok(vec![
        Row::new("advected", "|Gamma| - 1, max", traj.gamma_norm_err_max(), 1e-9),
        Row::new("advected", "|Gamma - R^T e_z|, max", traj.gamma_consistency_max(), 1e-6),
    ])
}
