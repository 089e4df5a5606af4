//! Cosserat-rod kinetostatics of a 6-RUS parallel continuum robot.
//!
//! Each leg is a motor-driven crank, a universal joint, a pre-curved elastic
//! rod and a spherical joint on the moving platform. The crate provides
//!
//! * [`rod`]: the single-rod static model and its base-to-tip integration,
//! * [`mechanism`]: the leg/platform geometry and the shooting unknown and
//!   residual layouts,
//! * [`shooting`]: inverse and forward kinetostatics solved by shooting with
//!   Levenberg-Marquardt,
//! * [`analysis`]: stiffness, rotation, trajectory and workspace studies.
//!
//! With the default `parallel` feature, rod integrations, Jacobian columns
//! and workspace samples can run on the rayon pool ([`ExecMode::Parallel`]).
//! Results are bitwise identical to sequential execution.

pub mod analysis;
pub mod error;
pub mod exec;
pub mod geom3;
pub mod mechanism;
pub mod ode;
pub mod rod;
pub mod shooting;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use geom3::{Pose, Rot3, Vec3};
pub use mechanism::{default_geometry, EEPose, GuessVector, MechanismConfig, ResidualVector, Wrench};
pub use ode::IntegratorConfig;
pub use rod::{RodParams, RodState};
pub use shooting::{solve_fk, solve_ik, SolveResult, SolveStatus, SolverConfig};
