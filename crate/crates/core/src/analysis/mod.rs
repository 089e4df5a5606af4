//! Batch studies built on the IK/FK solvers: axial stiffness under a
//! compressive load, platform yaw range, trajectory following and
//! reachable-workspace sampling.

mod rotation;
mod stiffness;
mod trajectory;
mod workspace;

pub use rotation::rotation_sweep;
pub use stiffness::{axial_stiffness_sweep, linear_fit, LinearFit, StiffnessSweep};
pub use trajectory::{follow_trajectory, HelixSpec, Trajectory, TrajectoryRecord, TrajectoryRun};
pub use workspace::{workspace_sample, Cylinder, GridResolution, HeightBin, WorkspaceAtlas, WorkspacePoint};

use std::time::Instant;

use crate::error::{Error, Result};
use crate::geom3::Vec3;
use crate::mechanism::LEG_COUNT;
use crate::shooting::{SolveResult, SolveStatus};

/// One sample of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    /// Swept quantity: force (N), yaw (rad) or sample index.
    pub parameter: f64,
    pub status: SolveStatus,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    pub ee_position: Vec3,
    pub motor_angles: [f64; LEG_COUNT],
    /// Seconds.
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn ee_height(&self) -> f64 {
        self.ee_position.z
    }

    fn from_result(parameter: f64, r: &SolveResult, wall_time: f64) -> Self {
        SweepRecord {
            parameter,
            status: r.status,
            converged: r.converged,
            residual_norm: r.residual_norm,
            iterations: r.iterations,
            ee_position: r.ee_pose.position,
            motor_angles: r.motor_angles,
            wall_time,
        }
    }
}

/// Outcome of one timed solve. Non-convergence is data here, not an error;
/// only invalid inputs propagate.
pub(crate) struct Timed {
    /// `None` when the solve broke down before producing an iterate.
    pub result: Option<SolveResult>,
    pub wall_time: f64,
}

impl Timed {
    /// The equations were solved, whether or not the motor limits hold.
    pub fn solved(&self) -> Option<&SolveResult> {
        self.result.as_ref().filter(|r| r.status != SolveStatus::NoConvergence)
    }
}

pub(crate) fn timed<F>(solve: F) -> Result<Timed>
where
    F: FnOnce() -> Result<SolveResult>,
{
    let start = Instant::now();
    let out = solve();
    let wall_time = start.elapsed().as_secs_f64();
    let result = match out {
        Ok(r) => Some(r),
        Err(Error::NoConvergence(r)) => Some(*r),
        Err(Error::LegIntegration { .. } | Error::JacobianColumn { .. } | Error::SingularNormalEquations) => None,
        Err(e) => return Err(e),
    };
    Ok(Timed { result, wall_time })
}

pub(crate) fn record(parameter: f64, t: &Timed) -> SweepRecord {
    match &t.result {
        Some(r) => SweepRecord::from_result(parameter, r, t.wall_time),
        None => SweepRecord {
            parameter,
            status: SolveStatus::NoConvergence,
            converged: false,
            residual_norm: f64::NAN,
            iterations: 0,
            ee_position: Vec3::repeat(f64::NAN),
            motor_angles: [f64::NAN; LEG_COUNT],
            wall_time: t.wall_time,
        },
    }
}
