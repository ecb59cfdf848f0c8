//! Run configuration: a TOML document with `params`, `initial`, `gait`,
//! `forces`, `integrator` and `run` sections. All quantities are SI.

use std::path::{Path, PathBuf};

use fwmav::dynamics::BuiltinForces;
use fwmav::model::{BodyInertia, WingInertia};
use fwmav::so3::{exp_so3, project_so3};
use fwmav::{
    GaitSpec, InertialParams, IntegratorConfig, LinearDamping, Mat3, Method, ReducedState, ShapeConfig, Vec3, VelocityZ,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attitude inputs further than this from SO(3) (Frobenius) are reported.
pub const PROJECTION_WARN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize config: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("{field}: {reason}")]
    Field { field: String, reason: String },
}

impl ConfigError {
    fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Field { field: field.into(), reason: reason.into() }
    }

    fn nested(prefix: &str, e: fwmav::ParamError) -> Self {
        ConfigError::field(format!("{prefix}.{}", e.field), e.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub gait: GaitSection,
    #[serde(default)]
    pub forces: ForcesSection,
    pub integrator: IntegratorSection,
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub gravity: f64,
    #[serde(default)]
    pub density: f64,
    pub body: BodySection,
    pub left_wing: WingSection,
    pub right_wing: WingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySection {
    pub mass: f64,
    /// About the torso center of mass, torso frame, row-major.
    pub inertia: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingSection {
    pub mass: f64,
    /// About the hinge, wing frame, row-major.
    pub inertia: [[f64; 3]; 3],
    /// Hinge to wing center of mass, wing frame.
    pub com_offset: [f64; 3],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Inertial position of the torso center of mass.
    #[serde(default)]
    pub position: [f64; 3],
    /// Torso-frame linear velocity.
    #[serde(default)]
    pub velocity: [f64; 3],
    /// Torso attitude `R_BI` and torso-frame angular velocity.
    #[serde(default)]
    pub body: Orientation,
    /// Wing attitudes relative to the torso and wing-frame rates relative to
    /// the torso.
    #[serde(default)]
    pub left_wing: Orientation,
    #[serde(default)]
    pub right_wing: Orientation,
}

/// Either `axis_angle` (preferred) or a row-major `matrix`; identity when
/// both are absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Orientation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_angle: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 3]; 3]>,
    #[serde(default)]
    pub rate: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitSection {
    /// Joint torque amplitude (N·m); zero disables the gait.
    pub amplitude: f64,
    pub frequency: f64,
    /// `[left, right]` phase offsets (rad).
    pub phase: [f64; 2],
    pub axis_left: [f64; 3],
    pub axis_right: [f64; 3],
}

impl Default for GaitSection {
    fn default() -> Self {
        GaitSection {
            amplitude: 0.0,
            frequency: 1.0,
            phase: [0.0; 2],
            axis_left: [1.0, 0.0, 0.0],
            axis_right: [1.0, 0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcesSection {
    #[default]
    Zero,
    LinearDamping {
        c_lin: f64,
        c_rot: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Mk4,
    Rk4Project,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Method {
        match m {
            MethodName::Mk4 => Method::MuntheKaas4,
            MethodName::Rk4Project => Method::Rk4Project,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default = "one")]
    pub record_every: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub duration: f64,
    #[serde(default = "default_trajectory")]
    pub trajectory: PathBuf,
    /// Defaults to the trajectory path with a `.json` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

fn default_trajectory() -> PathBuf {
    PathBuf::from("trajectory.csv")
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    /// Trajectory path; the summary moves next to it.
    pub out: Option<PathBuf>,
}

/// A validated configuration, ready to simulate.
#[derive(Debug, Clone)]
pub struct Run {
    pub params: InertialParams,
    pub initial: ReducedState,
    pub gait: GaitSpec,
    pub forces: BuiltinForces,
    pub integrator: IntegratorConfig,
    pub duration: f64,
    pub trajectory: PathBuf,
    pub summary: PathBuf,
    /// Non-fatal findings, e.g. attitude matrices that needed projection.
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(d) = o.duration {
            self.run.duration = d;
        }
        if let Some(out) = &o.out {
            self.run.trajectory = out.clone();
            self.run.summary = None;
        }
    }

    pub fn build(&self) -> Result<Run, ConfigError> {
        let params = self.params.build()?;
        let mut warnings = Vec::new();
        let initial = self.initial.build(&mut warnings)?;
        let gait = self.gait.build()?;
        let forces = match self.forces {
            ForcesSection::Zero => BuiltinForces::Zero,
            ForcesSection::LinearDamping { c_lin, c_rot } => BuiltinForces::LinearDamping(
                LinearDamping::new(c_lin, c_rot).map_err(|e| ConfigError::nested("forces", e))?,
            ),
        };
        let integrator =
            IntegratorConfig::new(self.integrator.dt, self.integrator.method.into(), self.integrator.record_every)
                .map_err(|e| ConfigError::nested("integrator", e))?;
        let duration = self.run.duration;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(ConfigError::field("run.duration", format!("must be positive (got {duration})")));
        }
        let trajectory = self.run.trajectory.clone();
        let summary = self.run.summary.clone().unwrap_or_else(|| trajectory.with_extension("json"));
        Ok(Run { params, initial, gait, forces, integrator, duration, trajectory, summary, warnings })
    }
}

fn mat(rows: &[[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

impl ParamsSection {
    fn build(&self) -> Result<InertialParams, ConfigError> {
        let wing = |w: &WingSection| WingInertia {
            mass: w.mass,
            inertia: mat(&w.inertia),
            com_offset: Vec3::from(w.com_offset),
        };
        InertialParams::new(
            BodyInertia { mass: self.body.mass, inertia: mat(&self.body.inertia) },
            wing(&self.left_wing),
            wing(&self.right_wing),
            self.gravity,
            self.density,
        )
        .map_err(|e| ConfigError::nested("params", e))
    }
}

impl Orientation {
    fn rotation(&self, field: &str, warnings: &mut Vec<String>) -> Result<fwmav::Rotation, ConfigError> {
        match (&self.axis_angle, &self.matrix) {
            (Some(_), Some(_)) => Err(ConfigError::field(field, "give either axis_angle or matrix, not both")),
            (Some(v), None) => {
                let v = Vec3::from(*v);
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(ConfigError::field(format!("{field}.axis_angle"), "must be finite"));
                }
                Ok(exp_so3(&v))
            }
            (None, Some(m)) => {
                let m = mat(m);
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(ConfigError::field(format!("{field}.matrix"), "must be finite"));
                }
                let r = project_so3(&m).map_err(|e| ConfigError::field(format!("{field}.matrix"), e.to_string()))?;
                let dist = (r.matrix() - m).norm();
                if dist > PROJECTION_WARN {
                    warnings.push(format!("{field}.matrix: projected onto SO(3), moved by {dist:e}"));
                }
                Ok(r)
            }
            (None, None) => Ok(fwmav::Rotation::identity()),
        }
    }

    fn rate(&self, field: &str) -> Result<Vec3, ConfigError> {
        finite(&format!("{field}.rate"), self.rate)
    }
}

fn finite(field: &str, v: [f64; 3]) -> Result<Vec3, ConfigError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vec3::from(v))
    } else {
        Err(ConfigError::field(field, "must be finite"))
    }
}

impl InitialSection {
    fn build(&self, warnings: &mut Vec<String>) -> Result<ReducedState, ConfigError> {
        let attitude = self.body.rotation("initial.body", warnings)?;
        let shape = ShapeConfig {
            left: self.left_wing.rotation("initial.left_wing", warnings)?,
            right: self.right_wing.rotation("initial.right_wing", warnings)?,
        };
        let z = VelocityZ {
            v: finite("initial.velocity", self.velocity)?,
            w_body: self.body.rate("initial.body")?,
            w_left: self.left_wing.rate("initial.left_wing")?,
            w_right: self.right_wing.rate("initial.right_wing")?,
        };
        Ok(ReducedState::new(attitude, finite("initial.position", self.position)?, shape, z, 0.0))
    }
}

impl GaitSection {
    fn build(&self) -> Result<GaitSpec, ConfigError> {
        GaitSpec::new(
            self.amplitude,
            self.frequency,
            self.phase,
            [Vec3::from(self.axis_left), Vec3::from(self.axis_right)],
        )
        .map_err(|e| ConfigError::nested("gait", e))
    }
}

/// The conservative configuration shipped as `configs/conservative.toml`,
/// used when no `--config` is given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/conservative.toml");

pub fn default_config() -> RunConfig {
    RunConfig::from_toml(DEFAULT_CONFIG).expect("bundled config parses")
}
