//! Trajectory CSV, error-series CSV and summary JSON writers.
//!
//! Numbers are written with Rust's shortest round-trip scientific format, so
//! a file parses back to the exact recorded values and identical runs give
//! identical bytes.

use std::io::{self, Write};

use fwmav::oracle::{Comparison, STATE_GROUPS};
use fwmav::Trajectory;
use serde::{Deserialize, Serialize};

/// Trajectory columns, in order. Rotations of the torso are written in full
/// (row-major `R_BI`); wing attitudes relative to the torso as axis-angle.
pub const CSV_COLUMNS: [&str; 36] = [
    "t", //
    "r_x", "r_y", "r_z", //
    "R11", "R12", "R13", "R21", "R22", "R23", "R31", "R32", "R33", //
    "gamma_x", "gamma_y", "gamma_z", //
    "v_x", "v_y", "v_z", //
    "wB_x", "wB_y", "wB_z", //
    "aaL_x", "aaL_y", "aaL_z", //
    "wL_x", "wL_y", "wL_z", //
    "aaR_x", "aaR_y", "aaR_z", //
    "wR_x", "wR_y", "wR_z", //
    "E", "pi_z",
];

pub fn write_trajectory(w: &mut impl Write, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{}", CSV_COLUMNS.join(","))?;
    let mut row = Vec::with_capacity(CSV_COLUMNS.len());
    for s in &traj.samples {
        let st = &s.state;
        row.clear();
        row.push(s.t);
        row.extend(st.position.iter());
        let r = st.attitude.matrix();
        row.extend((0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)])));
        row.extend(st.pose.gamma.iter());
        row.extend(st.z.v.iter());
        row.extend(st.z.w_body.iter());
        row.extend(st.pose.shape.left.log().iter());
        row.extend(st.z.w_left.iter());
        row.extend(st.pose.shape.right.log().iter());
        row.extend(st.z.w_right.iter());
        row.push(s.diagnostics.energy);
        row.push(s.diagnostics.pi_z);
        write_row(w, &row)?;
    }
    Ok(())
}

/// Per-sample relative error of each state group, reduced vs oracle.
pub fn write_error_series(w: &mut impl Write, cmp: &Comparison) -> io::Result<()> {
    writeln!(w, "t,{}", STATE_GROUPS.join(","))?;
    for (t, e) in &cmp.series {
        let mut row = vec![*t];
        row.extend_from_slice(e);
        write_row(w, &row)?;
    }
    Ok(())
}

fn write_row(w: &mut impl Write, row: &[f64]) -> io::Result<()> {
    for (k, x) in row.iter().enumerate() {
        if k > 0 {
            w.write_all(b",")?;
        }
        write!(w, "{x:e}")?;
    }
    w.write_all(b"\n")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub energy_drift_rel: f64,
    pub pi_z_drift_rel: f64,
    pub gamma_norm_err_max: f64,
    pub gamma_consistency_max: f64,
    pub steps: usize,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn new(traj: &Trajectory, wall_time_s: f64) -> Self {
        Summary {
            energy_drift_rel: traj.energy_drift_rel(),
            pi_z_drift_rel: traj.pi_z_drift_rel(),
            gamma_norm_err_max: traj.gamma_norm_err_max(),
            gamma_consistency_max: traj.gamma_consistency_max(),
            steps: traj.steps,
            wall_time_s,
        }
    }
}
