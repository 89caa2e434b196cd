//! Declarative scenario files.
//!
//! Scenarios are TOML documents with the sections `[model]`, `[controller]`,
//! `[trajectory]`, `[disturbance]`, `[sim]` and an optional `[output]`.
//! Unknown keys are rejected. A complete example:
//!
//! ```toml
//! name = "fig7"
//!
//! [model]
//! gravity = 9.81
//! links = [
//!     { mass = 1.0, length = 1.0, com_distance = 0.5, inertia_zz = 0.08333333333333333 },
//!     { mass = 1.0, length = 1.0, com_distance = 0.5, inertia_zz = 0.08333333333333333 },
//! ]
//!
//! [controller]
//! type = "id_integral"   # or "pd"
//! kp = 2.4               # scalar (times identity) or one value per joint
//! kd = 4.2
//! ki = 1.0
//!
//! [trajectory]
//! joints = [
//!     { shape = "sin", amplitude = 0.5, frequency = 1.0 },
//!     { shape = "cos", amplitude = 0.5, frequency = 1.0 },
//! ]
//!
//! [disturbance]
//! kind = "constant"      # "zero" | "constant" | "sinusoid"
//! value = [1.0, 0.5]
//!
//! [sim]
//! dt = 0.001
//! duration = 60.0
//! stride = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlLaw, Controller, GainSet, TrajectorySpec};
use crate::dynamics::{GrasperChain, LinkParams, ManipulatorModel};
use crate::sim::{DisturbanceSpec, SimConfig};
use crate::JointVector;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("{origin}: invalid scenario: {source}")]
    Invalid {
        origin: String,
        #[source]
        source: crate::Error,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelSection,
    pub controller: ControllerSection,
    pub trajectory: TrajectorySpec,
    pub disturbance: DisturbanceSection,
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default = "stock_links")]
    pub links: Vec<LinkParams>,
    /// Kinematics-only grasper skeleton reported alongside the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasper: Option<GrasperChain>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            gravity: default_gravity(),
            links: stock_links(),
            grasper: None,
        }
    }
}

fn default_gravity() -> f64 {
    9.81
}

fn stock_links() -> Vec<LinkParams> {
    ManipulatorModel::stock_two_link().links().to_vec()
}

/// Diagonal gain given as a scalar multiple of identity or per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Uniform(f64),
    PerJoint(Vec<f64>),
}

impl Gain {
    fn expand(&self, n: usize) -> JointVector {
        match self {
            Gain::Uniform(k) => JointVector::from_element(n, *k),
            Gain::PerJoint(v) => JointVector::from_column_slice(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(rename = "type")]
    pub law: ControlLaw,
    pub kp: Gain,
    pub kd: Gain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ki: Option<Gain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DisturbanceSection {
    Zero,
    Constant { value: Vec<f64> },
    Sinusoid { amplitude: Vec<f64>, frequency: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_qdot: Option<Vec<f64>>,
    #[serde(default = "default_divergence_limit")]
    pub divergence_limit: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            duration: default_duration(),
            stride: default_stride(),
            initial_q: None,
            initial_qdot: None,
            divergence_limit: default_divergence_limit(),
        }
    }
}

fn default_dt() -> f64 {
    SimConfig::default().dt
}
fn default_duration() -> f64 {
    SimConfig::default().duration
}
fn default_stride() -> usize {
    1
}
fn default_divergence_limit() -> f64 {
    SimConfig::default().divergence_limit
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for output files; the `--out-dir` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// CSV file name inside the output directory; defaults to `<name>.csv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// Runtime objects assembled from a scenario.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: ManipulatorModel,
    pub controller: Controller,
    pub trajectory: TrajectorySpec,
    pub disturbance: DisturbanceSpec,
    pub config: SimConfig,
    pub grasper: Option<GrasperChain>,
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn csv_name(&self) -> String {
        self.output
            .csv
            .clone()
            .unwrap_or_else(|| format!("{}.csv", self.name))
    }

    /// Validates the scenario and builds the model, controller and config.
    pub fn build(&self) -> Result<Experiment, ScenarioError> {
        self.build_inner().map_err(|source| ScenarioError::Invalid {
            origin: self.name.clone(),
            source,
        })
    }

    fn build_inner(&self) -> crate::Result<Experiment> {
        use crate::Error;

        let model = ManipulatorModel::new(self.model.links.clone(), self.model.gravity)?;
        let n = model.dof();
        let c = &self.controller;
        let ki = match (&c.ki, c.law) {
            (Some(k), _) => k.expand(n),
            (None, ControlLaw::Pd) => JointVector::zeros(n),
            (None, ControlLaw::IdIntegral) => {
                return Err(Error::InvalidInput(
                    "controller type id_integral requires ki".into(),
                ))
            }
        };
        if c.law == ControlLaw::IdIntegral && ki.iter().any(|&k| k <= 0.0) {
            return Err(Error::InvalidInput(
                "controller type id_integral requires ki > 0".into(),
            ));
        }
        let gains = GainSet::new(c.kp.expand(n), c.kd.expand(n), ki)?;
        if gains.dof() != n {
            return Err(Error::DimensionMismatch {
                what: "controller gains",
                expected: n,
                got: gains.dof(),
            });
        }
        let gains = match c.law {
            ControlLaw::Pd => gains.without_integral(),
            ControlLaw::IdIntegral => gains,
        };

        self.trajectory.validate()?;
        if self.trajectory.dof() != n {
            return Err(Error::DimensionMismatch {
                what: "trajectory joints",
                expected: n,
                got: self.trajectory.dof(),
            });
        }

        let disturbance = match &self.disturbance {
            DisturbanceSection::Zero => DisturbanceSpec::zero(n),
            DisturbanceSection::Constant { value } => DisturbanceSpec::constant(value),
            DisturbanceSection::Sinusoid {
                amplitude,
                frequency,
            } => DisturbanceSpec::sinusoid(amplitude, *frequency),
        };
        if disturbance.dof() != n {
            return Err(Error::DimensionMismatch {
                what: "disturbance",
                expected: n,
                got: disturbance.dof(),
            });
        }
        if !disturbance.bound().is_finite() {
            return Err(Error::InvalidInput("disturbance must be bounded".into()));
        }

        let s = &self.sim;
        let config = SimConfig {
            dt: s.dt,
            duration: s.duration,
            stride: s.stride,
            initial_q: s.initial_q.as_deref().map(JointVector::from_column_slice),
            initial_qdot: s
                .initial_qdot
                .as_deref()
                .map(JointVector::from_column_slice),
            divergence_limit: s.divergence_limit,
        };
        config.validate()?;
        if let Some(g) = &self.model.grasper {
            g.validate()?;
        }

        Ok(Experiment {
            model,
            controller: Controller::new(c.law, gains),
            trajectory: self.trajectory.clone(),
            disturbance,
            config,
            grasper: self.model.grasper,
        })
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["fig6", "fig7", "fig7-pd", "fig8"];

/// Built-in scenarios on the stock two-link arm tracking `½ [sin t, cos t]`.
///
/// * `fig6`: computed-torque PD, `K_p = 4.2 I`, `K_d = 2.4 I`, no disturbance.
/// * `fig7`: integral action, `K_d = 4.2 I`, `K_p = 2.4 I`, `K_I = I`, `d = [1, 0.5]`.
/// * `fig7-pd`: the `fig7` loop with `K_I = 0`.
/// * `fig8`: integral action, `K_d = 21 I`, `K_p = 12 I`, `K_I = 5 I`, `d = [1, 0.5]`.
pub fn preset(name: &str) -> Option<Scenario> {
    let tremor = DisturbanceSection::Constant {
        value: vec![1.0, 0.5],
    };
    let (law, kp, kd, ki, disturbance) = match name {
        "fig6" => (ControlLaw::Pd, 4.2, 2.4, None, DisturbanceSection::Zero),
        "fig7" => (ControlLaw::IdIntegral, 2.4, 4.2, Some(1.0), tremor),
        "fig7-pd" => (ControlLaw::Pd, 2.4, 4.2, None, tremor),
        "fig8" => (ControlLaw::IdIntegral, 12.0, 21.0, Some(5.0), tremor),
        _ => return None,
    };
    Some(Scenario {
        name: name.to_string(),
        model: ModelSection::default(),
        controller: ControllerSection {
            law,
            kp: Gain::Uniform(kp),
            kd: Gain::Uniform(kd),
            ki: ki.map(Gain::Uniform),
        },
        trajectory: TrajectorySpec::half_sin_cos(),
        disturbance,
        sim: SimSection::default(),
        output: OutputSection::default(),
    })
}
