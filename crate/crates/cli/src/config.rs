//! Run configuration file (TOML).
//!
//! Lengths and forces are SI; every angle in the file is in degrees. A
//! missing `[mechanism]` table means the built-in default geometry.

use std::path::{Path, PathBuf};

use pcr_core::geom3::{Mat3, Rot3, Vec3};
use pcr_core::mechanism::{LegConfig, MechanismConfig, MotorLimits, LEG_COUNT};
use pcr_core::rod::{CrossSection, Material, RodParams};
use pcr_core::{default_geometry, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub mechanism: MechanismFile,
    pub solver: SolverConfig,
    pub stiffness: StiffnessFile,
    pub rotation: RotationFile,
    pub trajectory: TrajectoryFile,
    pub workspace: WorkspaceFile,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("out"),
            mechanism: MechanismFile::from_config(&default_geometry()),
            solver: SolverConfig::default(),
            stiffness: StiffnessFile::default(),
            rotation: RotationFile::default(),
            trajectory: TrajectoryFile::default(),
            workspace: WorkspaceFile::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.mechanism.to_config()?.validate()?;
        self.solver.validate()?;
        self.stiffness.validate()?;
        self.trajectory.validate()?;
        self.workspace.validate()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodFile {
    pub length: f64,
    pub diameter: f64,
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub v_star: [f64; 3],
    /// 1/m.
    pub u_star: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegFile {
    pub motor_position: [f64; 3],
    /// Rows of the motor frame rotation.
    pub motor_orientation: [[f64; 3]; 3],
    pub crank_length: f64,
    /// Spherical joint position in the platform frame.
    pub ee_attachment: [f64; 3],
    pub rod: RodFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismFile {
    pub gravity: [f64; 3],
    pub ee_mass: f64,
    pub rest_height: f64,
    pub motor_limits_deg: [f64; 2],
    pub legs: Vec<LegFile>,
}

impl Default for MechanismFile {
    fn default() -> Self {
        MechanismFile::from_config(&default_geometry())
    }
}

impl MechanismFile {
    pub fn from_config(m: &MechanismConfig) -> Self {
        let legs = m
            .legs
            .iter()
            .map(|l| {
                let r = l.motor_orientation.matrix();
                LegFile {
                    motor_position: l.motor_position.into(),
                    motor_orientation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
                    crank_length: l.crank_length,
                    ee_attachment: l.ee_attachment.into(),
                    rod: RodFile {
                        length: l.rod.length,
                        diameter: l.rod.section.diameter,
                        youngs_modulus: l.rod.material.youngs_modulus,
                        poisson_ratio: l.rod.material.poisson_ratio,
                        density: l.rod.material.density,
                        v_star: l.rod.v_star.into(),
                        u_star: l.rod.u_star.into(),
                    },
                }
            })
            .collect();
        MechanismFile {
            gravity: m.gravity.into(),
            ee_mass: m.ee_mass,
            rest_height: m.rest_height,
            motor_limits_deg: [to_degrees_exact(m.motor_limits.min), to_degrees_exact(m.motor_limits.max)],
            legs,
        }
    }

    pub fn to_config(&self) -> Result<MechanismConfig, CliError> {
        if self.legs.len() != LEG_COUNT {
            return Err(CliError::config(format!(
                "mechanism needs exactly {LEG_COUNT} legs, found {}",
                self.legs.len()
            )));
        }
        let gravity = Vec3::from(self.gravity);
        let mut legs = Vec::with_capacity(LEG_COUNT);
        for l in &self.legs {
            let rows = l.motor_orientation;
            let r = Mat3::from_fn(|i, j| rows[i][j]);
            let rod = RodParams {
                length: l.rod.length,
                section: CrossSection::circular(l.rod.diameter)?,
                material: Material {
                    youngs_modulus: l.rod.youngs_modulus,
                    poisson_ratio: l.rod.poisson_ratio,
                    density: l.rod.density,
                },
                v_star: l.rod.v_star.into(),
                u_star: l.rod.u_star.into(),
                gravity,
            };
            legs.push(LegConfig {
                motor_position: l.motor_position.into(),
                motor_orientation: Rot3::new(r)?,
                crank_length: l.crank_length,
                ee_attachment: l.ee_attachment.into(),
                rod,
            });
        }
        let [min, max] = self.motor_limits_deg;
        let mech = MechanismConfig {
            legs: legs.try_into().expect("six legs"),
            gravity,
            ee_mass: self.ee_mass,
            motor_limits: MotorLimits::from_degrees(min, max),
            rest_height: self.rest_height,
        };
        mech.validate()?;
        Ok(mech)
    }
}

/// Degrees that convert back to exactly `rad`, so writing a loaded config
/// and reading it again reproduces the same radians.
pub fn to_degrees_exact(rad: f64) -> f64 {
    let deg = rad.to_degrees();
    if !deg.is_finite() || deg.to_radians() == rad {
        return deg;
    }
    let step = |x: f64, up: bool| {
        let b = x.to_bits() as i64;
        let n = if (x >= 0.0) == up { b + 1 } else { b - 1 };
        f64::from_bits(n as u64)
    };
    let (mut lo, mut hi) = (deg, deg);
    for _ in 0..64 {
        lo = step(lo, false);
        hi = step(hi, true);
        for c in [lo, hi] {
            if c.to_radians() == rad {
                return c;
            }
        }
    }
    deg
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StiffnessFile {
    /// Compressive loads, N, applied as `[0, 0, -f]`.
    pub forces: Vec<f64>,
}

impl Default for StiffnessFile {
    fn default() -> Self {
        StiffnessFile {
            forces: (0..=30).map(|k| 5.0 * k as f64).collect(),
        }
    }
}

impl StiffnessFile {
    fn validate(&self) -> Result<(), CliError> {
        if self.forces.is_empty() {
            return Err(CliError::config("stiffness.forces is empty"));
        }
        if self.forces.iter().any(|f| !f.is_finite() || *f < 0.0) || self.forces.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::config("stiffness.forces must be non-negative and non-decreasing"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotationFile {
    pub yaw_deg: Vec<f64>,
}

impl Default for RotationFile {
    fn default() -> Self {
        RotationFile {
            yaw_deg: (0..=18).map(|k| 5.0 * k as f64).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryFile {
    /// Helix axis point; defaults to the rest pose.
    pub center: Option<[f64; 3]>,
    pub radius: f64,
    pub pitch: f64,
    pub turns: f64,
    pub samples: usize,
    pub force: [f64; 3],
    pub moment: [f64; 3],
}

impl Default for TrajectoryFile {
    fn default() -> Self {
        TrajectoryFile {
            center: None,
            radius: 0.03,
            pitch: 0.02,
            turns: 2.0,
            samples: 40,
            force: [0.0, 0.0, -5.0],
            moment: [0.0; 3],
        }
    }
}

impl TrajectoryFile {
    fn validate(&self) -> Result<(), CliError> {
        if self.samples < 2 {
            return Err(CliError::config("trajectory.samples must be at least 2"));
        }
        if !(self.radius >= 0.0 && self.turns > 0.0 && self.pitch.is_finite()) {
            return Err(CliError::config("trajectory needs radius >= 0, turns > 0 and a finite pitch"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkspaceFile {
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub heights: usize,
    pub rings: usize,
    pub sectors: usize,
    /// When set, replaces the explicit grid with one of about this many points.
    pub samples: Option<usize>,
    pub force: [f64; 3],
    pub moment: [f64; 3],
}

impl Default for WorkspaceFile {
    fn default() -> Self {
        WorkspaceFile {
            radius: 0.15,
            z_min: 0.3,
            z_max: 0.5,
            heights: 5,
            rings: 4,
            sectors: 12,
            samples: None,
            force: [0.0; 3],
            moment: [0.0; 3],
        }
    }
}

impl WorkspaceFile {
    fn validate(&self) -> Result<(), CliError> {
        if self.samples == Some(0) {
            return Err(CliError::config("workspace.samples must be positive"));
        }
        if self.samples.is_none() && (self.heights == 0 || self.rings == 0 || self.sectors == 0) {
            return Err(CliError::config("workspace grid resolutions must be positive"));
        }
        if !(self.radius >= 0.0 && self.z_min <= self.z_max) {
            return Err(CliError::config("workspace needs radius >= 0 and z_min <= z_max"));
        }
        Ok(())
    }
}
