use super::{record, timed, SweepRecord};
use crate::error::Result;
use crate::mechanism::{MechanismConfig, Wrench};
use crate::shooting::{solve_ik, SolverConfig};

/// Inverse solves for pure yaw (rad) about the platform center at the rest
/// height, unloaded and with a massless platform.
///
/// Each solve is warm-started from the last one that satisfied the
/// equations, so `yaws` should be ordered along the path of interest.
pub fn rotation_sweep(yaws: &[f64], mech: &MechanismConfig, cfg: &SolverConfig) -> Result<Vec<SweepRecord>> {
    let mut mech = mech.clone();
    mech.ee_mass = 0.0;
    let mut warm = None;
    let mut records = Vec::with_capacity(yaws.len());
    for &yaw in yaws {
        let mut pose = mech.rest_pose();
        pose.yaw = yaw;
        let t = timed(|| solve_ik(&pose, &Wrench::default(), &mech, cfg, warm.as_ref()))?;
        records.push(record(yaw, &t));
        if let Some(r) = t.solved() {
            warm = Some(r.guess.clone());
        }
    }
    Ok(records)
}
