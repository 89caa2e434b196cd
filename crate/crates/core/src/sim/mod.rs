//! Fixed-step closed-loop simulation.
//!
//! The integrated state is `[q, q̇, z]` where `z = ∫(q_d − q)` is the
//! controller's integral accumulator. Controller, trajectory and disturbance
//! are evaluated at every RK4 stage time.

mod disturbance;
mod metrics;

pub use disturbance::DisturbanceSpec;
pub use metrics::{metrics, Metrics, SETTLING_BAND, TAIL_FRACTION};

use nalgebra::DVector;

use crate::control::{ControlLaw, Controller, ControllerState, TrajectorySpec};
use crate::dynamics::ManipulatorModel;
use crate::integrate::rk4_step;
use crate::{check_dim, Error, JointVector, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// s
    pub dt: f64,
    /// s
    pub duration: f64,
    /// Integration steps per recorded sample.
    pub stride: usize,
    /// Defaults to `q_d(0)`.
    pub initial_q: Option<JointVector>,
    /// Defaults to `q̇_d(0)`.
    pub initial_qdot: Option<JointVector>,
    /// State magnitude treated as divergence.
    pub divergence_limit: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 60.0,
            stride: 1,
            initial_q: None,
            initial_qdot: None,
            divergence_limit: 1e6,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "duration {} must be at least dt {}",
                self.duration, self.dt
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidInput("stride must be at least 1".into()));
        }
        if self.divergence_limit.is_nan() || self.divergence_limit <= 0.0 {
            return Err(Error::InvalidInput(
                "divergence limit must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of integration steps, `round(duration / dt)`.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Number of recorded samples including `t = 0`.
    pub fn samples(&self) -> usize {
        1 + self.steps() / self.stride
    }
}

/// Recorded series plus metrics. All series share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub q: Vec<JointVector>,
    pub q_d: Vec<JointVector>,
    /// `q_d − q`
    pub error: Vec<JointVector>,
    pub u: Vec<JointVector>,
    pub d: Vec<JointVector>,
    /// Final integral accumulator.
    pub integral_error: JointVector,
    pub metrics: Metrics,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.first().map_or(0, |q| q.len())
    }

    /// Last recorded configuration.
    pub fn final_q(&self) -> &JointVector {
        self.q.last().expect("non-empty result")
    }
}

struct Loop<'a> {
    model: &'a ManipulatorModel,
    controller: &'a Controller,
    trajectory: &'a TrajectorySpec,
    disturbance: &'a DisturbanceSpec,
    n: usize,
}

impl Loop<'_> {
    fn split(&self, x: &DVector<f64>) -> (JointVector, JointVector, ControllerState) {
        let n = self.n;
        (
            x.rows(0, n).into_owned(),
            x.rows(n, n).into_owned(),
            ControllerState {
                integral_error: x.rows(2 * n, n).into_owned(),
            },
        )
    }

    fn control(&self, t: f64, x: &DVector<f64>) -> Result<(JointVector, JointVector)> {
        let (q, qdot, cs) = self.split(x);
        let desired = self.trajectory.at(t);
        let u = self
            .controller
            .torque(self.model, &q, &qdot, &desired, &cs)?;
        Ok((u, self.disturbance.at(t)))
    }

    fn derivative(&self, t: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        let (q, qdot, cs) = self.split(x);
        let desired = self.trajectory.at(t);
        let u = self
            .controller
            .torque(self.model, &q, &qdot, &desired, &cs)?;
        let d = self.disturbance.at(t);
        let qddot = self.model.forward_dynamics(&q, &qdot, &u, &d)?;
        let mut dx = DVector::zeros(3 * n);
        dx.rows_mut(0, n).copy_from(&qdot);
        dx.rows_mut(n, n).copy_from(&qddot);
        dx.rows_mut(2 * n, n).copy_from(&(desired.q - q));
        Ok(dx)
    }
}

/// Runs the closed loop and records every `stride`-th step, starting at `t = 0`.
///
/// Returns [`Error::Divergence`] with the time of the first step whose state is
/// non-finite or exceeds `config.divergence_limit`.
pub fn simulate(
    model: &ManipulatorModel,
    controller: &Controller,
    trajectory: &TrajectorySpec,
    disturbance: &DisturbanceSpec,
    config: &SimConfig,
) -> Result<SimResult> {
    config.validate()?;
    trajectory.validate()?;
    let n = model.dof();
    if controller.gains.dof() != n {
        return Err(Error::DimensionMismatch {
            what: "gains",
            expected: n,
            got: controller.gains.dof(),
        });
    }
    if trajectory.dof() != n {
        return Err(Error::DimensionMismatch {
            what: "trajectory",
            expected: n,
            got: trajectory.dof(),
        });
    }
    if disturbance.dof() != n {
        return Err(Error::DimensionMismatch {
            what: "disturbance",
            expected: n,
            got: disturbance.dof(),
        });
    }

    let start = trajectory.at(0.0);
    let q0 = config.initial_q.clone().unwrap_or(start.q);
    let qdot0 = config.initial_qdot.clone().unwrap_or(start.qdot);
    check_dim("initial_q", &q0, n)?;
    check_dim("initial_qdot", &qdot0, n)?;

    let plant = Loop {
        model,
        controller,
        trajectory,
        disturbance,
        n,
    };
    let mut x = DVector::zeros(3 * n);
    x.rows_mut(0, n).copy_from(&q0);
    x.rows_mut(n, n).copy_from(&qdot0);

    let samples = config.samples();
    let mut out = SimResult {
        t: Vec::with_capacity(samples),
        q: Vec::with_capacity(samples),
        q_d: Vec::with_capacity(samples),
        error: Vec::with_capacity(samples),
        u: Vec::with_capacity(samples),
        d: Vec::with_capacity(samples),
        integral_error: JointVector::zeros(n),
        metrics: Metrics::default(),
    };
    let mut record = |t: f64, x: &DVector<f64>| -> Result<()> {
        let (u, d) = plant.control(t, x)?;
        let q = x.rows(0, n).into_owned();
        let q_d = trajectory.at(t).q;
        out.t.push(t);
        out.error.push(&q_d - &q);
        out.q.push(q);
        out.q_d.push(q_d);
        out.u.push(u);
        out.d.push(d);
        Ok(())
    };

    record(0.0, &x)?;
    let dt = config.dt;
    for k in 0..config.steps() {
        let t = k as f64 * dt;
        x = rk4_step(t, &x, dt, |ts, xs| plant.derivative(ts, xs))?;
        let t_next = (k + 1) as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) || x.amax() > config.divergence_limit {
            return Err(Error::Divergence { time: t_next });
        }
        if (k + 1) % config.stride == 0 {
            record(t_next, &x)?;
        }
    }
    out.integral_error = x.rows(2 * n, n).into_owned();
    out.metrics = metrics(&out.t, &out.error, &out.u)?;
    Ok(out)
}

/// Convenience: controller law from the gains (integral when any `k_i > 0`).
pub fn controller_for(gains: crate::control::GainSet) -> Controller {
    let law = if gains.has_integral() {
        ControlLaw::IdIntegral
    } else {
        ControlLaw::Pd
    };
    Controller::new(law, gains)
}
