//! Rigid-body dynamics and kinematics of planar serial manipulators.
//!
//! The equations of motion are
//!
//! ```text
//! M(q) q'' + C(q, q') q' + g(q) = u + d
//! ```
//!
//! with `M` built from link center-of-mass Jacobians, `C` from the
//! Christoffel symbols of `M` (so that `M' - 2C` is skew-symmetric) and `g`
//! the gradient of the potential energy.

mod kinematics;
mod model;
mod regressor;

pub use kinematics::{DhRow, ForwardKinematics, GrasperChain};
pub use model::{JointType, LinkParams, ManipulatorModel, SINGULARITY_RCOND};
pub use regressor::{DynamicParameters, TWO_LINK_BASE_PARAMS};
