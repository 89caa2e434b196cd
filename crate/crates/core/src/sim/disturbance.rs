use crate::JointVector;

/// Input-additive disturbance `d(t)` with `sup ‖d(t)‖₂ ≤ bound()`.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    Zero {
        dof: usize,
    },
    /// N·m
    Constant {
        value: JointVector,
    },
    /// `d_i(t) = a_i sin(ω t)`, ω in rad/s.
    Sinusoid {
        amplitude: JointVector,
        frequency: f64,
    },
}

impl DisturbanceSpec {
    pub fn zero(dof: usize) -> Self {
        Self::Zero { dof }
    }

    pub fn constant(value: &[f64]) -> Self {
        Self::Constant {
            value: JointVector::from_column_slice(value),
        }
    }

    pub fn sinusoid(amplitude: &[f64], frequency: f64) -> Self {
        Self::Sinusoid {
            amplitude: JointVector::from_column_slice(amplitude),
            frequency,
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            Self::Zero { dof } => *dof,
            Self::Constant { value } => value.len(),
            Self::Sinusoid { amplitude, .. } => amplitude.len(),
        }
    }

    /// Bound `δ_sup` on `‖d(t)‖₂`.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Zero { .. } => 0.0,
            Self::Constant { value } => value.norm(),
            Self::Sinusoid { amplitude, .. } => amplitude.norm(),
        }
    }

    pub fn at(&self, t: f64) -> JointVector {
        match self {
            Self::Zero { dof } => JointVector::zeros(*dof),
            Self::Constant { value } => value.clone(),
            Self::Sinusoid {
                amplitude,
                frequency,
            } => amplitude * (frequency * t).sin(),
        }
    }
}
