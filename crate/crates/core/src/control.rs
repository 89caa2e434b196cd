//! Computed-torque controllers.
//!
//! Tracking error is `e = q_d − q` everywhere. The auxiliary acceleration
//! command is
//!
//! ```text
//! v = q̈_d + K_D (q̇_d − q̇) + K_P (q_d − q) + K_I ∫₀ᵗ (q_d − q) ds
//! ```
//!
//! and the inverse dynamics law is `u = M(q) v + C(q, q̇) q̇ + g(q)`. With an
//! exact model the closed loop reduces to `q̈ = v + M(q)⁻¹ d`.

use serde::{Deserialize, Serialize};

use crate::dynamics::ManipulatorModel;
use crate::{check_dim, Error, JointVector, Result};

/// Diagonal gains `K_P`, `K_D`, `K_I`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSet {
    kp: JointVector,
    kd: JointVector,
    ki: JointVector,
}

impl GainSet {
    pub fn new(kp: JointVector, kd: JointVector, ki: JointVector) -> Result<Self> {
        let n = kp.len();
        if n == 0 || kd.len() != n || ki.len() != n {
            return Err(Error::InvalidInput(format!(
                "gain vectors must share a non-zero length (kp {}, kd {}, ki {})",
                kp.len(),
                kd.len(),
                ki.len()
            )));
        }
        let finite = |v: &JointVector| v.iter().all(|x| x.is_finite());
        if !(finite(&kp) && finite(&kd) && finite(&ki)) {
            return Err(Error::InvalidInput("gains must be finite".into()));
        }
        if kp.iter().any(|&k| k <= 0.0) || kd.iter().any(|&k| k <= 0.0) {
            return Err(Error::InvalidInput(
                "kp and kd must be strictly positive".into(),
            ));
        }
        if ki.iter().any(|&k| k < 0.0) {
            return Err(Error::InvalidInput("ki must be non-negative".into()));
        }
        Ok(Self { kp, kd, ki })
    }

    /// `K = k · I` for each gain.
    pub fn uniform(n: usize, kp: f64, kd: f64, ki: f64) -> Result<Self> {
        Self::new(
            JointVector::from_element(n, kp),
            JointVector::from_element(n, kd),
            JointVector::from_element(n, ki),
        )
    }

    /// Gains without integral action.
    pub fn pd(n: usize, kp: f64, kd: f64) -> Result<Self> {
        Self::uniform(n, kp, kd, 0.0)
    }

    pub fn dof(&self) -> usize {
        self.kp.len()
    }

    pub fn kp(&self) -> &JointVector {
        &self.kp
    }

    pub fn kd(&self) -> &JointVector {
        &self.kd
    }

    pub fn ki(&self) -> &JointVector {
        &self.ki
    }

    /// Copy of these gains with `K_I = 0`.
    pub fn without_integral(&self) -> Self {
        Self {
            ki: JointVector::zeros(self.dof()),
            ..self.clone()
        }
    }

    pub fn has_integral(&self) -> bool {
        self.ki.iter().any(|&k| k > 0.0)
    }
}

/// Integral accumulator `∫₀ᵗ (q_d − q) ds`, in rad·s.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub integral_error: JointVector,
}

impl ControllerState {
    pub fn zero(n: usize) -> Self {
        Self {
            integral_error: JointVector::zeros(n),
        }
    }
}

/// Desired position, velocity and acceleration at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Desired {
    pub q: JointVector,
    pub qdot: JointVector,
    pub qddot: JointVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveShape {
    Sin,
    Cos,
}

/// `amplitude · shape(frequency · t + phase) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointWave {
    pub shape: WaveShape,
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub offset: f64,
}

impl JointWave {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let arg = self.frequency * t + self.phase;
        let (s, c) = arg.sin_cos();
        let (a, w) = (self.amplitude, self.frequency);
        match self.shape {
            WaveShape::Sin => (a * s + self.offset, a * w * c, -a * w * w * s),
            WaveShape::Cos => (a * c + self.offset, -a * w * s, -a * w * w * c),
        }
    }
}

/// Analytic joint-space reference trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub joints: Vec<JointWave>,
}

impl TrajectorySpec {
    /// `q_d(t) = ½ [sin t, cos t]ᵀ`.
    pub fn half_sin_cos() -> Self {
        let wave = |shape| JointWave {
            shape,
            amplitude: 0.5,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
        };
        Self {
            joints: vec![wave(WaveShape::Sin), wave(WaveShape::Cos)],
        }
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::InvalidInput("trajectory has no joints".into()));
        }
        for w in &self.joints {
            if ![w.amplitude, w.frequency, w.phase, w.offset]
                .iter()
                .all(|x| x.is_finite())
            {
                return Err(Error::InvalidInput(
                    "trajectory parameters must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> Desired {
        let n = self.dof();
        let mut d = Desired {
            q: JointVector::zeros(n),
            qdot: JointVector::zeros(n),
            qddot: JointVector::zeros(n),
        };
        for (i, w) in self.joints.iter().enumerate() {
            let (p, v, a) = w.eval(t);
            d.q[i] = p;
            d.qdot[i] = v;
            d.qddot[i] = a;
        }
        d
    }
}

fn check_loop(
    gains: &GainSet,
    q: &JointVector,
    qdot: &JointVector,
    desired: &Desired,
) -> Result<()> {
    let n = gains.dof();
    check_dim("q", q, n)?;
    check_dim("qdot", qdot, n)?;
    check_dim("q_d", &desired.q, n)?;
    check_dim("qdot_d", &desired.qdot, n)?;
    check_dim("qddot_d", &desired.qddot, n)
}

fn pd_feedback(
    gains: &GainSet,
    q: &JointVector,
    qdot: &JointVector,
    desired: &Desired,
) -> JointVector {
    &desired.qddot
        + gains.kd.component_mul(&(&desired.qdot - qdot))
        + gains.kp.component_mul(&(&desired.q - q))
}

/// Auxiliary acceleration command `v`.
pub fn auxiliary_input(
    gains: &GainSet,
    q: &JointVector,
    qdot: &JointVector,
    desired: &Desired,
    cstate: &ControllerState,
) -> Result<JointVector> {
    check_loop(gains, q, qdot, desired)?;
    check_dim("integral_error", &cstate.integral_error, gains.dof())?;
    Ok(pd_feedback(gains, q, qdot, desired) + gains.ki.component_mul(&cstate.integral_error))
}

fn resolve_torque(
    model: &ManipulatorModel,
    q: &JointVector,
    qdot: &JointVector,
    v: &JointVector,
) -> Result<JointVector> {
    let m = model.mass_matrix(q)?;
    let c = model.coriolis_matrix(q, qdot)?;
    let g = model.gravity_vector(q)?;
    Ok(m * v + c * qdot + g)
}

/// Inverse dynamics control with integral action: `u = M(q) v + C q̇ + g`.
pub fn inverse_dynamics_control(
    model: &ManipulatorModel,
    gains: &GainSet,
    q: &JointVector,
    qdot: &JointVector,
    desired: &Desired,
    cstate: &ControllerState,
) -> Result<JointVector> {
    check_dim("gains", gains.kp(), model.dof())?;
    let v = auxiliary_input(gains, q, qdot, desired, cstate)?;
    resolve_torque(model, q, qdot, &v)
}

/// Computed-torque PD law without integral action; `K_I` is ignored.
pub fn pd_computed_torque(
    model: &ManipulatorModel,
    gains: &GainSet,
    q: &JointVector,
    qdot: &JointVector,
    desired: &Desired,
) -> Result<JointVector> {
    check_dim("gains", gains.kp(), model.dof())?;
    check_loop(gains, q, qdot, desired)?;
    let v = pd_feedback(gains, q, qdot, desired);
    resolve_torque(model, q, qdot, &v)
}

/// Rectangle-rule update of the accumulator for fixed-sample use.
///
/// Closed-loop simulation does not call this: there the accumulator is an
/// integrated state.
pub fn update_integral(
    cstate: &ControllerState,
    q_d: &JointVector,
    q: &JointVector,
    dt: f64,
) -> Result<ControllerState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = cstate.integral_error.len();
    check_dim("q_d", q_d, n)?;
    check_dim("q", q, n)?;
    Ok(ControllerState {
        integral_error: &cstate.integral_error + (q_d - q) * dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLaw {
    /// Computed-torque PD, no integral action.
    Pd,
    /// Inverse dynamics with integral action.
    IdIntegral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub law: ControlLaw,
    pub gains: GainSet,
}

impl Controller {
    pub fn new(law: ControlLaw, gains: GainSet) -> Self {
        Self { law, gains }
    }

    pub fn torque(
        &self,
        model: &ManipulatorModel,
        q: &JointVector,
        qdot: &JointVector,
        desired: &Desired,
        cstate: &ControllerState,
    ) -> Result<JointVector> {
        match self.law {
            ControlLaw::Pd => pd_computed_torque(model, &self.gains, q, qdot, desired),
            ControlLaw::IdIntegral => {
                inverse_dynamics_control(model, &self.gains, q, qdot, desired, cstate)
            }
        }
    }
}
