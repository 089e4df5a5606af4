use super::{record, timed, SweepRecord};
use crate::error::{Error, Result};
use crate::geom3::Vec3;
use crate::mechanism::{MechanismConfig, Wrench, LEG_COUNT};
use crate::shooting::{fk_guess_from, solve_fk, solve_ik, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`. `None` with fewer than
/// two distinct abscissae.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx <= f64::EPSILON * (1.0 + mx * mx) * nf {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Clone, Debug)]
pub struct StiffnessSweep {
    /// Motor angles holding the unloaded platform at its rest pose.
    pub motor_angles: [f64; LEG_COUNT],
    pub reference_height: f64,
    /// One record per attempted force, `parameter` in newtons. The sweep
    /// stops after the first failure, which is kept as the last record.
    pub records: Vec<SweepRecord>,
    /// Least-squares fit of force against height drop; its slope is the
    /// axial stiffness in N/m.
    pub fit: Option<LinearFit>,
    /// Largest force with a converged solution.
    pub max_force: Option<f64>,
}

impl StiffnessSweep {
    pub fn stiffness(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn height_drop(&self, rec: &SweepRecord) -> f64 {
        self.reference_height - rec.ee_height()
    }
}

/// Pure vertical compression of the platform.
///
/// The motors are locked at the angles that hold the unloaded platform at
/// rest, then each force `F = [0, 0, -f]` is applied and the forward problem
/// is solved, warm-started from the previous load. `forces` must be
/// non-negative and non-decreasing.
pub fn axial_stiffness_sweep(forces: &[f64], mech: &MechanismConfig, cfg: &SolverConfig) -> Result<StiffnessSweep> {
    if forces.iter().any(|f| !f.is_finite() || *f < 0.0) {
        return Err(Error::invalid("forces", "must be finite and non-negative"));
    }
    if forces.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("forces", "must be non-decreasing"));
    }
    let rest = solve_ik(&mech.rest_pose(), &Wrench::default(), mech, cfg, None)?;
    let reference_height = rest.ee_pose.position.z;
    let motor_angles = rest.motor_angles;

    let mut records = Vec::with_capacity(forces.len());
    let mut warm = fk_guess_from(&rest);
    for &f in forces {
        let wrench = Wrench::force(Vec3::new(0.0, 0.0, -f));
        let t = timed(|| solve_fk(&motor_angles, &wrench, mech, cfg, Some(&warm)))?;
        records.push(record(f, &t));
        match t.solved() {
            Some(r) => warm = r.guess.clone(),
            None => break,
        }
    }

    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.converged).collect();
    let drops: Vec<f64> = ok.iter().map(|r| reference_height - r.ee_height()).collect();
    let loads: Vec<f64> = ok.iter().map(|r| r.parameter).collect();
    Ok(StiffnessSweep {
        motor_angles,
        reference_height,
        fit: linear_fit(&drops, &loads),
        max_force: loads.last().copied(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let fit = linear_fit(&x, &y).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_two_distinct_points() {
        assert!(linear_fit(&[1.0], &[2.0]).is_none());
        assert!(linear_fit(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        assert!(linear_fit(&[], &[]).is_none());
    }

    #[test]
    fn fit_r_squared_below_one_for_noisy_data() {
        let fit = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.2, 1.8, 3.1]).unwrap();
        assert!(fit.r_squared < 1.0 && fit.r_squared > 0.95);
    }

    #[test]
    fn rejects_bad_force_lists() {
        let mech = crate::mechanism::default_geometry();
        let cfg = SolverConfig::default();
        assert!(axial_stiffness_sweep(&[-1.0], &mech, &cfg).is_err());
        assert!(axial_stiffness_sweep(&[2.0, 1.0], &mech, &cfg).is_err());
        assert!(axial_stiffness_sweep(&[f64::NAN], &mech, &cfg).is_err());
    }
}
