//! Coupled shooting solver for the inverse (IK) and forward (FK)
//! kinetostatic problems.
//!
//! Six rod IVPs are integrated from guessed base conditions; their tip states
//! feed the platform force/moment balance, the tip position constraints and
//! the zero tip moment of the spherical joints. Levenberg-Marquardt with a
//! finite-difference Jacobian drives the 42 residuals to zero.

mod jacobian;
mod lm;
mod problem;

pub use jacobian::{column_step, fd_jacobian, fd_jacobian_with, DifferenceScheme, FdOptions};
pub use lm::{damped_step, max_abs, nls_solve, FnProblem, LeastSquaresProblem, LmConfig, LmOutcome, Termination};
pub use problem::{assemble_residual, rigid_chord_guess, ShootingProblem, Target};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::geom3::Vec3;
use crate::mechanism::{EEPose, GuessVector, MechanismConfig, Mode, ResidualVector, Wrench, LEG_COUNT};
use crate::ode::IntegratorConfig;
use crate::rod::RodState;
use problem::wrap_angle;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Bound on every residual component at convergence.
    pub residual_tolerance: f64,
    pub max_iterations: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub lm_damping_init: f64,
    pub central_differences: bool,
    pub integrator: IntegratorConfig,
    /// Parallelism inside one solve (legs and Jacobian columns).
    pub exec: ExecMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tolerance: 5e-10,
            max_iterations: 200,
            fd_step: 1e-8,
            lm_damping_init: 1e-3,
            central_differences: false,
            integrator: IntegratorConfig::default(),
            exec: ExecMode::Sequential,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.residual_tolerance) {
            return Err(Error::invalid("residual_tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be positive"));
        }
        if !positive(self.fd_step) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if !positive(self.lm_damping_init) {
            return Err(Error::invalid("lm_damping_init", "must be positive"));
        }
        self.integrator.validate()
    }

    pub fn fd_options(&self) -> FdOptions {
        FdOptions {
            step: self.fd_step,
            scheme: if self.central_differences {
                DifferenceScheme::Central
            } else {
                DifferenceScheme::Forward
            },
            exec: self.exec,
        }
    }

    pub fn lm_config(&self) -> LmConfig {
        LmConfig {
            tolerance: self.residual_tolerance,
            max_iterations: self.max_iterations,
            damping_init: self.lm_damping_init,
            fd: self.fd_options(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    /// Converged, but a motor angle is outside the admissible range.
    LimitViolation,
    NoConvergence,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Converged within tolerance and, for IK, within motor limits.
    pub converged: bool,
    pub guess: GuessVector,
    pub residual: ResidualVector,
    /// `max |E_i|`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub ee_pose: EEPose,
    pub motor_angles: [f64; LEG_COUNT],
    /// `(q2, q3)` per leg.
    pub universal_angles: [(f64, f64); LEG_COUNT],
    /// World-frame base force and base torsion `m_z(0)` per leg.
    pub base_wrenches: [(Vec3, f64); LEG_COUNT],
    /// Sampled centerlines; empty when sampling is disabled or fails.
    pub centerlines: Vec<Vec<RodState>>,
}

impl SolveResult {
    /// Tip states from the sampled centerlines.
    pub fn tips(&self) -> Option<[RodState; LEG_COUNT]> {
        if self.centerlines.len() != LEG_COUNT {
            return None;
        }
        let tips: Option<Vec<RodState>> = self.centerlines.iter().map(|c| c.last().copied()).collect();
        tips.map(|t| t.try_into().expect("six legs"))
    }
}

fn finalize(
    problem: &ShootingProblem<'_>,
    outcome: LmOutcome,
    cfg: &SolverConfig,
    check_limits: bool,
) -> Result<SolveResult> {
    let lm_converged = outcome.converged();
    let mut guess = GuessVector::from_values(problem.mode(), outcome.x)?;
    // report angles in (-pi, pi]; the residual is 2 pi periodic in them
    let (mut legs, pose) = guess.unpack();
    for (i, l) in legs.iter_mut().enumerate() {
        l.q1 = wrap_angle(problem.motor_angle(i, l));
        l.q2 = wrap_angle(l.q2);
        l.q3 = wrap_angle(l.q3);
    }
    guess = GuessVector::pack(problem.mode(), &legs, pose.as_ref())?;
    let ee_pose = problem.platform_pose(pose);

    let centerlines: Vec<Vec<RodState>> = if cfg.integrator.samples >= 2 {
        let lines: Result<Vec<_>> = (0..LEG_COUNT)
            .map(|i| problem.integrate_leg(i, &legs[i], &cfg.integrator).map(|s| s.samples))
            .collect();
        lines.unwrap_or_default()
    } else {
        Vec::new()
    };

    let residual = ResidualVector::from_values(outcome.residual)?;
    let residual_norm = residual.max_abs();
    let motor_angles = std::array::from_fn(|i| legs[i].q1);
    let within_limits = motor_angles.iter().all(|q| problem.mech.motor_limits.contains(*q));
    let status = if !lm_converged {
        SolveStatus::NoConvergence
    } else if check_limits && !within_limits {
        SolveStatus::LimitViolation
    } else {
        SolveStatus::Converged
    };
    let result = SolveResult {
        status,
        converged: status == SolveStatus::Converged,
        guess,
        residual,
        residual_norm,
        iterations: outcome.iterations,
        residual_history: outcome.history,
        ee_pose,
        motor_angles,
        universal_angles: std::array::from_fn(|i| (legs[i].q2, legs[i].q3)),
        base_wrenches: std::array::from_fn(|i| (legs[i].n0, legs[i].mz0)),
        centerlines,
    };
    if status == SolveStatus::NoConvergence {
        return Err(Error::NoConvergence(Box::new(result)));
    }
    Ok(result)
}

fn check_inputs(wrench: &Wrench, mech: &MechanismConfig, cfg: &SolverConfig) -> Result<()> {
    wrench.validate()?;
    mech.validate()?;
    cfg.validate()
}

fn warm_start_for(mode: Mode, warm: Option<&GuessVector>) -> Result<Option<&GuessVector>> {
    match warm {
        Some(g) if g.mode() != mode => Err(Error::LayoutMismatch {
            expected: format!("{mode:?} warm start"),
            got: format!("{:?} warm start", g.mode()),
        }),
        other => Ok(other),
    }
}

/// Motor angles (and the rest of the state) holding the platform at `pose`
/// under `wrench`.
///
/// A converged solution with a motor angle outside the limits is returned
/// with [`SolveStatus::LimitViolation`] and `converged == false`.
pub fn solve_ik(
    pose: &EEPose,
    wrench: &Wrench,
    mech: &MechanismConfig,
    cfg: &SolverConfig,
    warm_start: Option<&GuessVector>,
) -> Result<SolveResult> {
    pose.validate()?;
    check_inputs(wrench, mech, cfg)?;
    let problem =
        ShootingProblem::new(mech, Target::Ik(*pose), *wrench, cfg.integrator).with_exec(cfg.exec);
    let b0 = match warm_start_for(Mode::Ik, warm_start)? {
        Some(g) => g.clone(),
        None => GuessVector::pack_ik(&rigid_chord_guess(mech, pose, wrench, None, &cfg.integrator)?),
    };
    let outcome = nls_solve(&problem, b0.values(), &cfg.lm_config())?;
    finalize(&problem, outcome, cfg, true)
}

/// Platform pose reached with the given motor angles under `wrench`.
///
/// Without a warm start the search begins at the rest pose.
pub fn solve_fk(
    motor_angles: &[f64; LEG_COUNT],
    wrench: &Wrench,
    mech: &MechanismConfig,
    cfg: &SolverConfig,
    warm_start: Option<&GuessVector>,
) -> Result<SolveResult> {
    if motor_angles.iter().any(|q| !q.is_finite()) {
        return Err(Error::invalid("motor_angles", "must be finite"));
    }
    check_inputs(wrench, mech, cfg)?;
    let problem =
        ShootingProblem::new(mech, Target::Fk(*motor_angles), *wrench, cfg.integrator).with_exec(cfg.exec);
    let b0 = match warm_start_for(Mode::Fk, warm_start)? {
        Some(g) => g.clone(),
        None => {
            let rest = mech.rest_pose();
            let legs = rigid_chord_guess(mech, &rest, wrench, Some(motor_angles), &cfg.integrator)?;
            GuessVector::pack_fk(&legs, &rest)
        }
    };
    let outcome = nls_solve(&problem, b0.values(), &cfg.lm_config())?;
    finalize(&problem, outcome, cfg, false)
}

/// FK unknowns equivalent to a solved IK state.
pub fn fk_guess_from(result: &SolveResult) -> GuessVector {
    let (legs, _) = result.guess.unpack();
    GuessVector::pack_fk(&legs, &result.ee_pose)
}
