//! Serial-manipulator dynamics, inverse-dynamics control with integral action,
//! closed-loop error analysis and a fixed-step simulation harness.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: mass matrix, Christoffel Coriolis matrix, gravity, regressor,
//!   forward/inverse dynamics and DH forward kinematics.
//! * [`control`]: computed-torque PD and inverse dynamics with integral action.
//! * [`analysis`]: per-joint error transfer, Routh–Hurwitz test, poles, final value.
//! * [`sim`]: closed-loop RK4 simulation with the integral accumulator as state.
//! * [`scenario`], [`cli`], [`verify`]: declarative scenarios and the experiment runner.

pub mod analysis;
pub mod cli;
pub mod control;
pub mod dynamics;
mod error;
pub mod integrate;
pub mod scenario;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};

/// Joint-space vector: configuration, velocity, acceleration, torque or error.
pub type JointVector = nalgebra::DVector<f64>;

pub(crate) fn check_dim(what: &'static str, v: &JointVector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )));
    }
    Ok(())
}
