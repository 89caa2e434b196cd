//! Linear-in-parameters form `Y(q, q̇, q̈) θ = M q̈ + C q̇ + g` for the two-link arm.
//!
//! Base parameters (p = 5), with `c_i` the center-of-mass distances:
//!
//! ```text
//! θ₁ = m₁c₁² + m₂l₁² + I₁
//! θ₂ = m₂c₂² + I₂
//! θ₃ = m₂l₁c₂
//! θ₄ = m₁c₁ + m₂l₁
//! θ₅ = m₂c₂
//! ```
//!
//! Gravity `g₀` stays inside `Y`.

use nalgebra::{DMatrix, DVector};

use super::ManipulatorModel;
use crate::{check_dim, Error, JointVector, Result};

pub const TWO_LINK_BASE_PARAMS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicParameters {
    pub theta: DVector<f64>,
}

impl DynamicParameters {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

impl ManipulatorModel {
    fn require_two_link(&self) -> Result<()> {
        if self.dof() != 2 {
            return Err(Error::Unsupported(format!(
                "the regressor is defined for the two-link arm, model has {} joints",
                self.dof()
            )));
        }
        Ok(())
    }

    /// The model's base parameter vector θ.
    pub fn base_parameters(&self) -> Result<DynamicParameters> {
        self.require_two_link()?;
        let (a, b) = (self.links()[0], self.links()[1]);
        Ok(DynamicParameters {
            theta: DVector::from_column_slice(&[
                a.mass * a.com_distance.powi(2) + b.mass * a.length.powi(2) + a.inertia_zz,
                b.mass * b.com_distance.powi(2) + b.inertia_zz,
                b.mass * a.length * b.com_distance,
                a.mass * a.com_distance + b.mass * a.length,
                b.mass * b.com_distance,
            ]),
        })
    }

    /// Dynamic regressor `Y` (2 × 5).
    pub fn regressor(
        &self,
        q: &JointVector,
        qdot: &JointVector,
        qddot: &JointVector,
    ) -> Result<DMatrix<f64>> {
        self.require_two_link()?;
        check_dim("q", q, 2)?;
        check_dim("qdot", qdot, 2)?;
        check_dim("qddot", qddot, 2)?;
        let g0 = self.gravity();
        let (s2, c2) = q[1].sin_cos();
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        let (w1, w2) = (qdot[0], qdot[1]);
        let (a1, a2) = (qddot[0], qddot[1]);
        #[rustfmt::skip]
        let y = DMatrix::from_row_slice(2, TWO_LINK_BASE_PARAMS, &[
            a1, a1 + a2, c2 * (2.0 * a1 + a2) - s2 * (2.0 * w1 * w2 + w2 * w2), g0 * c1, g0 * c12,
            0.0, a1 + a2, c2 * a1 + s2 * w1 * w1,                                  0.0,     g0 * c12,
        ]);
        Ok(y)
    }
}
