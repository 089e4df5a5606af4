use nalgebra::DMatrix;
use std::f64::consts::PI;

use super::jacobian::{assemble_columns, difference_column, FdOptions};
use super::lm::LeastSquaresProblem;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::geom3::{rot_y, Vec3};
use crate::mechanism::{
    ee_attachment_point, proximal_pose, EEPose, GuessVector, LegUnknowns, MechanismConfig, Mode,
    ResidualVector, Wrench, LEG_COUNT,
};
use crate::ode::IntegratorConfig;
use crate::rod::{integrate_rod, natural_chord, RodSolution, RodState};

/// What the solve holds fixed: the platform pose (IK) or the motor angles (FK).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Ik(EEPose),
    Fk([f64; LEG_COUNT]),
}

impl Target {
    pub fn mode(&self) -> Mode {
        match self {
            Target::Ik(_) => Mode::Ik,
            Target::Fk(_) => Mode::Fk,
        }
    }
}

/// The coupled boundary-value problem for one load case.
#[derive(Clone, Debug)]
pub struct ShootingProblem<'a> {
    pub mech: &'a MechanismConfig,
    pub target: Target,
    pub wrench: Wrench,
    pub integrator: IntegratorConfig,
    pub exec: ExecMode,
}

impl<'a> ShootingProblem<'a> {
    pub fn new(mech: &'a MechanismConfig, target: Target, wrench: Wrench, integrator: IntegratorConfig) -> Self {
        ShootingProblem {
            mech,
            target,
            wrench,
            integrator: integrator.without_samples(),
            exec: ExecMode::Sequential,
        }
    }

    pub fn with_exec(mut self, exec: ExecMode) -> Self {
        self.exec = exec;
        self
    }

    pub fn mode(&self) -> Mode {
        self.target.mode()
    }

    fn check_mode(&self, b: &GuessVector) -> Result<()> {
        if b.mode() != self.mode() {
            return Err(Error::LayoutMismatch {
                expected: format!("{:?} guess", self.mode()),
                got: format!("{:?} guess", b.mode()),
            });
        }
        Ok(())
    }

    /// Motor angle of `leg` for the given unknowns.
    pub fn motor_angle(&self, leg: usize, u: &LegUnknowns) -> f64 {
        match &self.target {
            Target::Ik(_) => u.q1,
            Target::Fk(q) => q[leg],
        }
    }

    pub fn platform_pose(&self, pose_unknowns: Option<EEPose>) -> EEPose {
        match (&self.target, pose_unknowns) {
            (Target::Ik(p), _) => *p,
            (Target::Fk(_), Some(p)) => p,
            (Target::Fk(_), None) => unreachable!("FK guesses always carry a pose"),
        }
    }

    /// Integrates one leg from its universal joint. The base moment is
    /// `R_0 [0, 0, mz]`: the joint passes torsion only.
    pub fn integrate_leg(&self, leg: usize, u: &LegUnknowns, cfg: &IntegratorConfig) -> Result<RodSolution> {
        let cfg_leg = &self.mech.legs[leg];
        let base = proximal_pose(cfg_leg, self.motor_angle(leg, u), u.q2, u.q3);
        let m0 = base.rotation.matrix() * Vec3::new(0.0, 0.0, u.mz0);
        integrate_rod(&base, &u.n0, &m0, &cfg_leg.rod, cfg).map_err(|e| Error::LegIntegration {
            leg,
            source: Box::new(e),
        })
    }

    fn tips(&self, legs: &[LegUnknowns; LEG_COUNT]) -> Result<[RodState; LEG_COUNT]> {
        let tips = map_indexed(self.exec, LEG_COUNT, |i| {
            self.integrate_leg(i, &legs[i], &self.integrator).map(|s| s.tip)
        });
        let tips: Vec<RodState> = tips.into_iter().collect::<Result<_>>()?;
        Ok(tips.try_into().expect("six legs"))
    }

    /// Total external force on the platform, platform weight included.
    pub fn platform_force(&self) -> Vec3 {
        self.wrench.force + self.mech.ee_weight()
    }

    /// Boundary errors from the six tip states.
    pub fn assemble(&self, tips: &[RodState; LEG_COUNT], pose: &EEPose) -> ResidualVector {
        let force = self.platform_force();
        let re = pose.rotation();
        let mut sum_n = Vec3::zeros();
        let mut sum_m = Vec3::zeros();
        for tip in tips {
            sum_n += tip.n;
            sum_m += tip.position().cross(&tip.n) + tip.m;
        }
        let e_force = sum_n - force;
        let e_moment = sum_m - pose.position.cross(&force) - self.wrench.moment;
        let e_pos = std::array::from_fn(|i| {
            ee_attachment_point(pose, &self.mech.legs[i].ee_attachment) - tips[i].position()
        });
        let e_mom = std::array::from_fn(|i| re.matrix().tr_mul(&tips[i].m));
        ResidualVector::assemble(e_force, e_moment, &e_pos, &e_mom)
    }

    pub fn residual_vector(&self, b: &GuessVector) -> Result<ResidualVector> {
        self.check_mode(b)?;
        let (legs, pose) = b.unpack();
        let tips = self.tips(&legs)?;
        Ok(self.assemble(&tips, &self.platform_pose(pose)))
    }

    /// Finite-difference Jacobian that re-integrates only the leg owning each
    /// perturbed unknown. Since the other legs' integrations are pure
    /// functions of unchanged inputs, the result equals the generic
    /// column-by-column difference of [`Self::residual_vector`].
    pub fn jacobian_matrix(&self, b: &GuessVector, f0: Option<&[f64]>, fd: &FdOptions) -> Result<DMatrix<f64>> {
        self.check_mode(b)?;
        let (legs, _) = b.unpack();
        let tips = self.tips(&legs)?;
        let mode = self.mode();
        let x = b.values();
        let columns = map_indexed(fd.exec, x.len(), |j| {
            difference_column(x[j], j, f0, fd, |xj| {
                let mut values = x.to_vec();
                values[j] = xj;
                let perturbed = GuessVector::from_values(mode, values)?;
                let (plegs, ppose) = perturbed.unpack();
                let mut ptips = tips;
                if let Some(leg) = mode.leg_of_unknown(j) {
                    ptips[leg] = self.integrate_leg(leg, &plegs[leg], &self.integrator)?.tip;
                }
                Ok(self.assemble(&ptips, &self.platform_pose(ppose)).values().to_vec())
            })
        });
        Ok(assemble_columns(columns.into_iter().collect::<Result<_>>()?))
    }
}

impl LeastSquaresProblem for ShootingProblem<'_> {
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let b = GuessVector::from_values(self.mode(), x.to_vec())?;
        Ok(self.residual_vector(&b)?.values().to_vec())
    }

    fn jacobian(&self, x: &[f64], r: &[f64], fd: &FdOptions) -> Result<DMatrix<f64>> {
        let b = GuessVector::from_values(self.mode(), x.to_vec())?;
        self.jacobian_matrix(&b, Some(r), fd)
    }
}

/// Boundary residual for unknowns `b` under `target` and `wrench`.
pub fn assemble_residual(
    b: &GuessVector,
    target: &Target,
    wrench: &Wrench,
    mech: &MechanismConfig,
    integrator: &IntegratorConfig,
) -> Result<ResidualVector> {
    ShootingProblem::new(mech, *target, *wrench, *integrator).residual_vector(b)
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Root of `a cos q + b sin q = c` closest to `prefer`; the extremum of the
/// left side when no root exists.
fn solve_harmonic(a: f64, b: f64, c: f64, prefer: f64) -> f64 {
    let amp = a.hypot(b);
    let phase = b.atan2(a);
    if amp == 0.0 {
        return prefer;
    }
    let ratio = c / amp;
    if ratio >= 1.0 {
        return wrap_angle(phase);
    }
    if ratio <= -1.0 {
        return wrap_angle(phase + PI);
    }
    let d = ratio.acos();
    let r1 = wrap_angle(phase + d);
    let r2 = wrap_angle(phase - d);
    if wrap_angle(r1 - prefer).abs() <= wrap_angle(r2 - prefer).abs() {
        r1
    } else {
        r2
    }
}

/// Initial unknowns from a rigid-chord model.
///
/// With no load an unweighted rod pinned at both ends keeps its rest shape,
/// so its base-to-tip chord has the rest length and direction. The motor
/// angle is chosen so the crank tip lies one chord length from the platform
/// attachment, and the universal-joint angles align the rest chord with the
/// crank-to-attachment direction. Base forces share the external load and
/// carry each rod's own weight; torsion starts at zero.
pub fn rigid_chord_guess(
    mech: &MechanismConfig,
    pose: &EEPose,
    wrench: &Wrench,
    motor_angles: Option<&[f64; LEG_COUNT]>,
    integrator: &IntegratorConfig,
) -> Result<[LegUnknowns; LEG_COUNT]> {
    let force = wrench.force + mech.ee_weight();
    let mut out = [LegUnknowns::default(); LEG_COUNT];
    for (i, leg) in mech.legs.iter().enumerate() {
        let chord = natural_chord(&leg.rod, integrator)?;
        let chord_len = chord.norm();
        let c = chord / chord_len;
        let attach = ee_attachment_point(pose, &leg.ee_attachment);
        let rm = leg.motor_orientation.matrix();

        let q1 = match motor_angles {
            Some(q) => q[i],
            None => {
                // |a - l (cos q y + sin q z)| = |c|, with y, z the motor axes
                let a = attach - leg.motor_position;
                let l = leg.crank_length;
                let ay = a.dot(&rm.column(1));
                let az = a.dot(&rm.column(2));
                let rhs = (a.norm_squared() + l * l - chord_len * chord_len) / (2.0 * l);
                solve_harmonic(ay, az, rhs, mech.motor_limits.midpoint())
            }
        };

        let crank_tip = proximal_pose(leg, q1, 0.0, 0.0).position;
        let d = rm.tr_mul(&(attach - crank_tip)).normalize();
        // Rx(q2) Ry(q3) c = d: the x-component fixes q3, the y-z plane fixes q2
        let q3 = solve_harmonic(c.x, c.z, d.x, 0.0);
        let w = rot_y(q3) * c;
        let q2 = wrap_angle(d.z.atan2(d.y) - w.z.atan2(w.y));

        let rod_weight = leg.rod.mass_per_length() * leg.rod.length * leg.rod.gravity;
        out[i] = LegUnknowns {
            n0: force / LEG_COUNT as f64 + rod_weight,
            mz0: 0.0,
            q1,
            q2,
            q3,
        };
    }
    Ok(out)
}
