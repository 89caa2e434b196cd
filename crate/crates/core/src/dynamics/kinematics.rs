use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{JointType, ManipulatorModel};
use crate::{check_dim, Error, JointVector, Result};

/// One row of a standard Denavit–Hartenberg table.
///
/// The joint variable adds to `theta` for a revolute joint and to `d` for a
/// prismatic one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta: f64,
    pub joint: JointType,
}

impl DhRow {
    pub fn revolute(a: f64, alpha: f64, d: f64) -> Self {
        Self {
            a,
            alpha,
            d,
            theta: 0.0,
            joint: JointType::Revolute,
        }
    }

    pub fn prismatic(a: f64, alpha: f64, theta: f64) -> Self {
        Self {
            a,
            alpha,
            d: 0.0,
            theta,
            joint: JointType::Prismatic,
        }
    }

    /// `Rot_z(θ) · Trans_z(d) · Trans_x(a) · Rot_x(α)` at joint value `q`.
    pub fn transform(&self, q: f64) -> Isometry3<f64> {
        let (theta, d) = match self.joint {
            JointType::Revolute => (self.theta + q, self.d),
            JointType::Prismatic => (self.theta, self.d + q),
        };
        let rot_z = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta);
        let rot_x = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        Isometry3::from_parts(Translation3::new(0.0, 0.0, d), rot_z)
            * Isometry3::from_parts(Translation3::new(self.a, 0.0, 0.0), rot_x)
    }
}

/// Joint space to task space map `x = h(q)`.
pub trait ForwardKinematics {
    fn dof(&self) -> usize;

    fn dh_table(&self) -> Vec<DhRow>;

    /// Checks joint limits beyond the dimension check.
    fn check_joints(&self, _q: &JointVector) -> Result<()> {
        Ok(())
    }

    /// Base-to-end-effector transform.
    fn end_effector_pose(&self, q: &JointVector) -> Result<Isometry3<f64>> {
        check_dim("q", q, self.dof())?;
        self.check_joints(q)?;
        Ok(self
            .dh_table()
            .iter()
            .zip(q.iter())
            .fold(Isometry3::identity(), |acc, (row, &qi)| {
                acc * row.transform(qi)
            }))
    }

    /// Cartesian position of the end-effector frame origin, metres.
    fn forward_kinematics(&self, q: &JointVector) -> Result<Vector3<f64>> {
        Ok(self.end_effector_pose(q)?.translation.vector)
    }
}

impl ForwardKinematics for ManipulatorModel {
    fn dof(&self) -> usize {
        ManipulatorModel::dof(self)
    }

    fn dh_table(&self) -> Vec<DhRow> {
        self.links()
            .iter()
            .map(|link| DhRow::revolute(link.length, 0.0, 0.0))
            .collect()
    }
}

/// Kinematic skeleton of the laparoscopic grasper: rod and spring of combined
/// length `L1 + L2`, then two revolute joints and a prismatic extension.
///
/// DH rows `(a, α, d, θ)`:
///
/// | joint | a | α    | d         | θ  |
/// |-------|---|------|-----------|----|
/// | 1 (R) | 0 | −π/2 | L1 + L2   | q1 |
/// | 2 (R) | 0 | +π/2 | 0         | q2 |
/// | 3 (P) | 0 | 0    | q3        | 0  |
///
/// At `q = 0` the tip sits `L1 + L2` along the base z axis. Joint 1 rolls the
/// bending plane about the rod axis, joint 2 bends within it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrasperChain {
    /// Connecting rod length, m.
    pub l1: f64,
    /// Spring segment length, m.
    pub l2: f64,
    /// Allowed prismatic extension `[min, max]`, m. Defaults to `[0, L2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel: Option<(f64, f64)>,
}

impl GrasperChain {
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        let chain = Self {
            l1,
            l2,
            travel: None,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn with_travel(mut self, min: f64, max: f64) -> Result<Self> {
        self.travel = Some((min, max));
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l1 > 0.0 && self.l1.is_finite() && self.l2 > 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grasper lengths must be positive, got L1 = {}, L2 = {}",
                self.l1, self.l2
            )));
        }
        let (lo, hi) = self.travel();
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!(
                "prismatic travel [{lo}, {hi}] is not an interval"
            )));
        }
        Ok(())
    }

    pub fn travel(&self) -> (f64, f64) {
        self.travel.unwrap_or((0.0, self.l2))
    }

    pub fn joint_types(&self) -> [JointType; 3] {
        [
            JointType::Revolute,
            JointType::Revolute,
            JointType::Prismatic,
        ]
    }
}

impl ForwardKinematics for GrasperChain {
    fn dof(&self) -> usize {
        3
    }

    fn dh_table(&self) -> Vec<DhRow> {
        use std::f64::consts::FRAC_PI_2;
        vec![
            DhRow::revolute(0.0, -FRAC_PI_2, self.l1 + self.l2),
            DhRow::revolute(0.0, FRAC_PI_2, 0.0),
            DhRow::prismatic(0.0, 0.0, 0.0),
        ]
    }

    fn check_joints(&self, q: &JointVector) -> Result<()> {
        let (lo, hi) = self.travel();
        if !(lo..=hi).contains(&q[2]) {
            return Err(Error::InvalidInput(format!(
                "prismatic extension {} outside travel [{lo}, {hi}]",
                q[2]
            )));
        }
        Ok(())
    }
}
