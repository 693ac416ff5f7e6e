//! Trajectories of the first- and second-order systems, the forward-backward
//! dynamics, and the exponential-formula semigroups.

mod curve;
mod integrate;
mod semigroup;
mod trajectory;

pub use curve::{CurveKind, Monotonicity, ParameterCurve};
pub use integrate::{
    check_second_order_curves, fb_second_order_delta, integrate_first_order, integrate_forward_backward, integrate_second_order, FbDynamics,
};
pub use semigroup::{
    gradient_flow_semigroup, gradient_flow_trajectory, semigroup_trajectory, stojkovic_semigroup, stojkovic_trajectory, Refinement, SemigroupKind,
    SemigroupPoint,
};
pub use trajectory::{fmt, IntegratorMeta, Sample, Trajectory};

use crate::error::Result;
use crate::space::Point;

/// Dense-output evaluation x(t).
pub fn eval(traj: &Trajectory, t: f64) -> Result<Point> {
    traj.eval(t)
}
