//! Command-line driver: `simulate`, `check` and `compare-oracle`.
//!
//! Exit codes: 0 success; 1 property failure, oracle mismatch or I/O error;
//! 2 the simulation left the finite range; 3 invalid configuration.

pub mod config;
pub mod output;
pub mod suites;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fwmav::integrator::{self, simulate, Sample};
use fwmav::oracle::{compare, oracle_simulate, OracleState};
use fwmav::{dynamics, SimError, Trajectory};

use config::{ConfigError, Overrides, Run, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NONFINITE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Worst relative state error accepted by `compare-oracle`.
pub const ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "fwmav", version, about = "Reduced dynamics simulator for a flapping-wing micro aerial vehicle")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the configured run and write the trajectory CSV and summary JSON.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Trajectory CSV path; the summary is written next to it as .json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run the property suites and print measured values against tolerances.
    Check {
        #[command(flatten)]
        common: Common,
        /// Run a single suite.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(suites::SUITES))]
        only: Option<String>,
        /// Seed for the random-state suites.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace every tolerance with this value.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Integrate the reduced equations and the full-coordinate oracle side by side.
    CompareOracle {
        #[command(flatten)]
        common: Common,
        /// Compared horizon (s); 0 compares the initial states only.
        #[arg(long, visible_alias = "horizon", default_value_t = 0.5)]
        duration: f64,
        /// Error-series CSV path.
        #[arg(long, default_value = "oracle_errors.csv")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML). Defaults to the bundled conservative run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the integrator step (s).
    #[arg(long)]
    pub dt: Option<f64>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Simulate { common, out: path, duration } => {
            cmd_simulate(&common, &Overrides { dt: common.dt, duration, out: path }, out, err)
        }
        Command::Check { common, only, seed, tolerance } => {
            cmd_check(&common, only.as_deref(), seed, tolerance, out, err)
        }
        Command::CompareOracle { common, duration, out: path } => {
            cmd_compare_oracle(&common, duration, &path, out, err)
        }
    }
}

fn load(path: Option<&Path>, o: &Overrides, err: &mut dyn Write) -> Result<Run, ConfigError> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => config::default_config(),
    };
    cfg.apply(o);
    let run = cfg.build()?;
    for w in &run.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    Ok(run)
}

fn load_or_report(common: &Common, o: &Overrides, err: &mut dyn Write) -> Option<Run> {
    match load(common.config.as_deref(), o, err) {
        Ok(run) => Some(run),
        Err(e) => {
            let origin = common.config.as_deref().map_or("bundled config".into(), |p| p.display().to_string());
            let _ = writeln!(err, "error: {origin}: {e}");
            None
        }
    }
}

fn sim_exit(e: &SimError, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    match e {
        SimError::Invalid(_) => EXIT_CONFIG,
        _ => EXIT_NONFINITE,
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}

pub fn cmd_simulate(common: &Common, o: &Overrides, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(run) = load_or_report(common, o, err) else {
        return EXIT_CONFIG;
    };
    let start = Instant::now();
    let traj = match simulate(&run.params, &run.initial, &run.forces, &run.gait, &run.integrator, run.duration) {
        Ok(t) => t,
        Err(e) => return sim_exit(&e, err),
    };
    let summary = output::Summary::new(&traj, start.elapsed().as_secs_f64());
    let written = write_file(&run.trajectory, |w| output::write_trajectory(w, &traj)).and_then(|_| {
        write_file(&run.summary, |w| {
            serde_json::to_writer_pretty(&mut *w, &summary)?;
            writeln!(w)
        })
    });
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing output: {e}");
        return EXIT_FAILURE;
    }
    let _ = writeln!(
        out,
        "{} steps, {} samples -> {}\nenergy drift {:.3e}, pi_z drift {:.3e}, summary -> {}",
        traj.steps,
        traj.samples.len(),
        run.trajectory.display(),
        summary.energy_drift_rel,
        summary.pi_z_drift_rel,
        run.summary.display()
    );
    EXIT_OK
}

pub fn cmd_check(
    common: &Common,
    only: Option<&str>,
    seed: u64,
    tolerance: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let Some(run) = load_or_report(common, &Overrides { dt: common.dt, ..Overrides::default() }, err) else {
        return EXIT_CONFIG;
    };
    let names: Vec<&str> = match only {
        Some(name) => vec![name],
        None => suites::SUITES.to_vec(),
    };
    let mut all_passed = true;
    let _ = writeln!(out, "{:<10} {:<44} {:>12} {:>10}  result", "suite", "property", "measured", "tolerance");
    for (name, result) in suites::run_suites(&names, &run, seed) {
        match result {
            Ok(rows) => {
                for mut row in rows {
                    if let Some(t) = tolerance {
                        row.tolerance = t;
                    }
                    let ok = row.passed();
                    all_passed &= ok;
                    let _ = writeln!(
                        out,
                        "{:<10} {:<44} {:>12.3e} {:>10.1e}  {}",
                        row.suite,
                        row.property,
                        row.measured,
                        row.tolerance,
                        if ok { "pass" } else { "FAIL" }
                    );
                }
            }
            Err(e) => {
                all_passed = false;
                let _ = writeln!(out, "{name:<10} {:<44} {:>12} {:>10}  FAIL", format!("run failed: {e}"), "-", "-");
            }
        }
    }
    if all_passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn initial_only(run: &Run, st: fwmav::ReducedState) -> Trajectory {
    let sample = Sample {
        t: st.t,
        state: st,
        forces: dynamics::total_forces(&run.forces, &run.gait, &st),
        diagnostics: integrator::diagnostics(&run.params, &st),
    };
    Trajectory { samples: vec![sample], steps: 0 }
}

pub fn cmd_compare_oracle(common: &Common, horizon: f64, path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(run) = load_or_report(common, &Overrides { dt: common.dt, ..Overrides::default() }, err) else {
        return EXIT_CONFIG;
    };
    if !(horizon.is_finite() && horizon >= 0.0) {
        let _ = writeln!(err, "error: horizon must be non-negative (got {horizon})");
        return EXIT_CONFIG;
    }
    let (reduced, oracle) = if horizon == 0.0 {
        let matched = match OracleState::from_reduced(&run.initial).to_reduced() {
            Ok(st) => st,
            Err(e) => return sim_exit(&e.into(), err),
        };
        (initial_only(&run, run.initial), initial_only(&run, matched))
    } else {
        let every = run.integrator.record_every();
        let reduced = simulate(&run.params, &run.initial, &run.forces, &run.gait, &run.integrator, horizon);
        let oracle =
            oracle_simulate(&run.params, &run.initial, &run.forces, &run.gait, run.integrator.dt(), horizon, every);
        match (reduced, oracle) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return sim_exit(&e, err),
        }
    };
    let cmp = compare(&reduced, &oracle);
    if let Err(e) = write_file(path, |w| output::write_error_series(w, &cmp)) {
        let _ = writeln!(err, "error: writing {}: {e}", path.display());
        return EXIT_FAILURE;
    }
    let _ = writeln!(
        out,
        "{} samples over {horizon} s; max relative error {:.3e} ({} at t = {}); tolerance {:.0e}",
        cmp.series.len(),
        cmp.max_error,
        cmp.worst_group,
        cmp.worst_time,
        ORACLE_TOLERANCE
    );
    if cmp.max_error <= ORACLE_TOLERANCE {
        EXIT_OK
    } else {
        let _ = writeln!(err, "mismatch: worst component {} at t = {}", cmp.worst_group, cmp.worst_time);
        EXIT_FAILURE
    }
}
