use std::f64::consts::TAU;

use super::{record, timed, SweepRecord};
use crate::error::{Error, Result};
use crate::geom3::Vec3;
use crate::mechanism::{EEPose, MechanismConfig, Wrench};
use crate::shooting::{solve_fk, solve_ik, SolverConfig, SolveStatus};

/// Sampled reference path with a constant external wrench.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<EEPose>,
    pub wrench: Wrench,
}

/// Helix about a vertical axis through `center`, rising `pitch` per turn
/// and centered on `center.z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HelixSpec {
    pub center: Vec3,
    pub radius: f64,
    pub pitch: f64,
    pub turns: f64,
    pub samples: usize,
}

impl HelixSpec {
    pub fn around(mech: &MechanismConfig) -> Self {
        HelixSpec {
            center: Vec3::new(0.0, 0.0, mech.rest_height),
            radius: 0.03,
            pitch: 0.02,
            turns: 2.0,
            samples: 40,
        }
    }

    pub fn poses(&self) -> Vec<EEPose> {
        let n = self.samples;
        (0..n)
            .map(|k| {
                let t = if n > 1 { self.turns * k as f64 / (n - 1) as f64 } else { 0.0 };
                let (s, c) = (TAU * t).sin_cos();
                let p = self.center
                    + Vec3::new(self.radius * c, self.radius * s, self.pitch * (t - 0.5 * self.turns));
                EEPose::new(p, 0.0, 0.0, 0.0)
            })
            .collect()
    }

    pub fn trajectory(&self, wrench: Wrench) -> Trajectory {
        Trajectory {
            poses: self.poses(),
            wrench,
        }
    }
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.poses.len() < 2 {
            return Err(Error::invalid("trajectory", "needs at least two samples"));
        }
        for p in &self.poses {
            p.validate()?;
        }
        self.wrench.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub reference: EEPose,
    pub ik: SweepRecord,
    /// `None` when the inverse solve did not provide motor angles.
    pub fk: Option<SweepRecord>,
    /// `|p_fk - p_ref|`, m.
    pub position_error: Option<f64>,
}

impl TrajectoryRecord {
    /// Both solves converged and the motor angles are admissible.
    pub fn converged(&self) -> bool {
        self.ik.converged && self.fk.as_ref().is_some_and(|f| f.converged)
    }

    /// Inverse status, or the forward status once the inverse succeeded.
    pub fn status(&self) -> SolveStatus {
        match &self.fk {
            Some(f) if self.ik.converged => f.status,
            _ => self.ik.status,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRun {
    pub records: Vec<TrajectoryRecord>,
}

impl TrajectoryRun {
    pub fn converged_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.converged()).count() as f64 / self.records.len() as f64
    }

    /// Largest position error over converged samples.
    pub fn max_position_error(&self) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.converged())
            .filter_map(|r| r.position_error)
            .reduce(f64::max)
    }
}

/// Solves IK along the path, then feeds each motor-angle set back through
/// FK to check that the reference is recovered.
///
/// IK is warm-started from the previous IK sample and FK from the previous
/// FK sample, so the forward solves never see the inverse state they are
/// checking.
pub fn follow_trajectory(traj: &Trajectory, mech: &MechanismConfig, cfg: &SolverConfig) -> Result<TrajectoryRun> {
    traj.validate()?;
    let mut ik_warm = None;
    let mut fk_warm = None;
    let mut records = Vec::with_capacity(traj.poses.len());
    for (k, pose) in traj.poses.iter().enumerate() {
        let ik = timed(|| solve_ik(pose, &traj.wrench, mech, cfg, ik_warm.as_ref()))?;
        let ik_rec = record(k as f64, &ik);
        let Some(ik_sol) = ik.solved() else {
            records.push(TrajectoryRecord {
                reference: *pose,
                ik: ik_rec,
                fk: None,
                position_error: None,
            });
            continue;
        };
        ik_warm = Some(ik_sol.guess.clone());

        let q = ik_sol.motor_angles;
        let fk = timed(|| solve_fk(&q, &traj.wrench, mech, cfg, fk_warm.as_ref()))?;
        let fk_rec = record(k as f64, &fk);
        let position_error = fk.solved().map(|r| (r.ee_pose.position - pose.position).norm());
        if let Some(r) = fk.solved() {
            fk_warm = Some(r.guess.clone());
        }
        records.push(TrajectoryRecord {
            reference: *pose,
            ik: ik_rec,
            fk: Some(fk_rec),
            position_error,
        });
    }
    Ok(TrajectoryRun { records })
}
