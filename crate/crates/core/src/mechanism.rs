//! 6-RUS mechanism description: motor/crank/universal-joint kinematics,
//! platform attachments and the layouts of the 42-dimensional shooting
//! unknowns and boundary residuals.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom3::{rot_x, rot_y, rpy_to_rotation, Mat3, Pose, Rot3, Vec3};
use crate::rod::{CrossSection, Material, RodParams};

pub const LEG_COUNT: usize = 6;
/// Length of both the unknown and the residual vector.
pub const SYSTEM_DIM: usize = 42;
pub const IK_LEG_UNKNOWNS: usize = 7;
pub const FK_LEG_UNKNOWNS: usize = 6;
/// Offset of the platform pose inside an FK guess.
pub const FK_POSE_OFFSET: usize = LEG_COUNT * FK_LEG_UNKNOWNS;

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegConfig {
    /// Motor axis location in the world frame.
    pub motor_position: Vec3,
    /// Motor frame; the motor turns about its local x-axis.
    pub motor_orientation: Rot3,
    pub crank_length: f64,
    /// Spherical-joint location in the platform frame.
    pub ee_attachment: Vec3,
    pub rod: RodParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorLimits {
    /// rad
    pub min: f64,
    /// rad
    pub max: f64,
}

impl MotorLimits {
    pub fn from_degrees(min: f64, max: f64) -> Self {
        MotorLimits {
            min: min.to_radians(),
            max: max.to_radians(),
        }
    }

    pub fn contains(&self, q: f64) -> bool {
        q >= self.min && q <= self.max
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }
}

impl Default for MotorLimits {
    fn default() -> Self {
        MotorLimits::from_degrees(-20.0, 90.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub legs: [LegConfig; LEG_COUNT],
    pub gravity: Vec3,
    /// Platform mass, kg; its weight acts at the platform center.
    pub ee_mass: f64,
    pub motor_limits: MotorLimits,
    /// Platform height of the nominal rest pose, m.
    pub rest_height: f64,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        for leg in &self.legs {
            if !(leg.crank_length > 0.0 && leg.crank_length.is_finite()) {
                return Err(Error::invalid("crank_length", "must be positive"));
            }
            Rot3::new(*leg.motor_orientation.matrix())?;
            leg.rod.validate()?;
            if leg.rod.gravity != self.gravity {
                return Err(Error::invalid("gravity", "rod gravity differs from mechanism gravity"));
            }
            let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
            if !finite(&leg.motor_position) || !finite(&leg.ee_attachment) {
                return Err(Error::invalid("leg geometry", "must be finite"));
            }
        }
        if !(self.motor_limits.min < self.motor_limits.max) {
            return Err(Error::invalid("motor_limits", "min must be below max"));
        }
        if !(self.ee_mass >= 0.0 && self.ee_mass.is_finite()) {
            return Err(Error::invalid("ee_mass", "must be non-negative"));
        }
        if !self.rest_height.is_finite() {
            return Err(Error::invalid("rest_height", "must be finite"));
        }
        Ok(())
    }

    /// Sets gravity on the mechanism and every rod.
    pub fn with_gravity(mut self, gravity: Vec3) -> Self {
        self.gravity = gravity;
        for leg in &mut self.legs {
            leg.rod.gravity = gravity;
        }
        self
    }

    pub fn ee_weight(&self) -> Vec3 {
        self.ee_mass * self.gravity
    }

    /// Total rod self-weight, `sum(rho A g l)`.
    pub fn rod_weight(&self) -> Vec3 {
        self.legs
            .iter()
            .map(|l| l.rod.mass_per_length() * l.rod.length * l.rod.gravity)
            .sum()
    }

    pub fn rest_pose(&self) -> EEPose {
        EEPose::new(Vec3::new(0.0, 0.0, self.rest_height), 0.0, 0.0, 0.0)
    }
}

/// Platform pose: center position and roll/pitch/yaw (rad).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EEPose {
    pub position: Vec3,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl EEPose {
    pub fn new(position: Vec3, roll: f64, pitch: f64, yaw: f64) -> Self {
        EEPose {
            position,
            roll,
            pitch,
            yaw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.position.iter().all(|c| c.is_finite())
            && self.roll.is_finite()
            && self.pitch.is_finite()
            && self.yaw.is_finite();
        if !finite {
            return Err(Error::invalid("pose", "must be finite"));
        }
        if self.pitch.abs() >= PI / 2.0 {
            return Err(Error::invalid("pitch", "must lie strictly inside (-90, 90) degrees"));
        }
        Ok(())
    }

    pub fn rotation(&self) -> Rot3 {
        rpy_to_rotation(self.roll, self.pitch, self.yaw)
    }
}

/// External force and moment at the platform center, world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl Wrench {
    pub fn force(force: Vec3) -> Self {
        Wrench {
            force,
            moment: Vec3::zeros(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.force.iter().chain(self.moment.iter()).all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("wrench", "must be finite"))
        }
    }
}

/// Universal-joint frame of a leg: crank tip position and rod base rotation
/// `R_M * Rx(q2) * Ry(q3)`.
pub fn proximal_pose(leg: &LegConfig, q1: f64, q2: f64, q3: f64) -> Pose {
    let (s1, c1) = q1.sin_cos();
    let crank = Vec3::new(0.0, leg.crank_length * c1, leg.crank_length * s1);
    let rm = leg.motor_orientation.matrix();
    Pose::new(
        Rot3::from_matrix_unchecked(rm * rot_x(q2) * rot_y(q3)),
        leg.motor_position + rm * crank,
    )
}

pub fn ee_attachment_point(pose: &EEPose, attachment: &Vec3) -> Vec3 {
    pose.position + pose.rotation().matrix() * attachment
}

/// Parameters of the symmetric default layout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefaultGeometry {
    pub base_radius: f64,
    pub platform_radius: f64,
    pub crank_length: f64,
    /// Half the angular gap between the two motors of a pair, rad.
    pub base_half_spread: f64,
    /// Half the angular gap between the two attachments of a pair, rad.
    pub platform_half_spread: f64,
    pub rod_length: f64,
    pub rod_diameter: f64,
    pub precurvature_radius: f64,
    pub rest_height: f64,
}

impl Default for DefaultGeometry {
    fn default() -> Self {
        DefaultGeometry {
            base_radius: 0.35,
            platform_radius: 0.15,
            crank_length: 0.12,
            base_half_spread: 10f64.to_radians(),
            platform_half_spread: 25f64.to_radians(),
            rod_length: 0.53,
            rod_diameter: 0.004,
            precurvature_radius: 0.3005,
            rest_height: 0.4,
        }
    }
}

impl DefaultGeometry {
    /// Three motor pairs 120 degrees apart; each motor frame has its y-axis
    /// pointing radially outward and z up. Leg `2k` sits at `120k - spread`,
    /// leg `2k + 1` at `120k + spread` (degrees), so a 120 degree turn about
    /// the world z-axis maps leg `i` onto leg `i + 2`.
    pub fn build(&self) -> MechanismConfig {
        let gravity = Vec3::new(0.0, 0.0, -STANDARD_GRAVITY);
        let rod = RodParams::precurved(
            self.rod_length,
            self.precurvature_radius,
            CrossSection {
                diameter: self.rod_diameter,
            },
            Material::titanium_alloy(),
        )
        .with_gravity(gravity);
        let legs = std::array::from_fn(|i| {
            let center = (2.0 * PI / 3.0) * (i / 2) as f64;
            let side = if i % 2 == 0 { -1.0 } else { 1.0 };
            let phi_b = center + side * self.base_half_spread;
            let phi_p = center + side * self.platform_half_spread;
            let y = Vec3::new(phi_b.cos(), phi_b.sin(), 0.0);
            let z = Vec3::z();
            let x = y.cross(&z);
            LegConfig {
                motor_position: self.base_radius * y,
                motor_orientation: Rot3::from_matrix_unchecked(Mat3::from_columns(&[x, y, z])),
                crank_length: self.crank_length,
                ee_attachment: self.platform_radius * Vec3::new(phi_p.cos(), phi_p.sin(), 0.0),
                rod,
            }
        });
        MechanismConfig {
            legs,
            gravity,
            ee_mass: 0.0,
            motor_limits: MotorLimits::default(),
            rest_height: self.rest_height,
        }
    }
}

pub fn default_geometry() -> MechanismConfig {
    DefaultGeometry::default().build()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ik,
    Fk,
}

impl Mode {
    pub fn leg_stride(self) -> usize {
        match self {
            Mode::Ik => IK_LEG_UNKNOWNS,
            Mode::Fk => FK_LEG_UNKNOWNS,
        }
    }

    /// Leg that unknown `index` belongs to; `None` for platform-pose entries.
    pub fn leg_of_unknown(self, index: usize) -> Option<usize> {
        let leg = index / self.leg_stride();
        (leg < LEG_COUNT).then_some(leg)
    }
}

/// Per-leg shooting unknowns. `n0` is the world-frame base force, `mz0` the
/// base moment about the rod's local z-axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LegUnknowns {
    pub n0: Vec3,
    pub mz0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

/// Shooting unknowns.
///
/// IK layout, per leg: `[nx, ny, nz, mz, q1, q2, q3]`.
/// FK layout, per leg: `[nx, ny, nz, mz, q2, q3]`, then `[p_e, roll, pitch, yaw]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuessVector {
    mode: Mode,
    values: Vec<f64>,
}

impl GuessVector {
    pub fn from_values(mode: Mode, values: Vec<f64>) -> Result<Self> {
        if values.len() != SYSTEM_DIM {
            return Err(Error::LayoutMismatch {
                expected: format!("{SYSTEM_DIM} values"),
                got: format!("{} values", values.len()),
            });
        }
        Ok(GuessVector { mode, values })
    }

    pub fn pack_ik(legs: &[LegUnknowns; LEG_COUNT]) -> Self {
        let mut values = Vec::with_capacity(SYSTEM_DIM);
        for l in legs {
            values.extend_from_slice(&[l.n0.x, l.n0.y, l.n0.z, l.mz0, l.q1, l.q2, l.q3]);
        }
        GuessVector {
            mode: Mode::Ik,
            values,
        }
    }

    /// `q1` of each leg is ignored: in FK the motor angles are inputs.
    pub fn pack_fk(legs: &[LegUnknowns; LEG_COUNT], pose: &EEPose) -> Self {
        let mut values = Vec::with_capacity(SYSTEM_DIM);
        for l in legs {
            values.extend_from_slice(&[l.n0.x, l.n0.y, l.n0.z, l.mz0, l.q2, l.q3]);
        }
        values.extend_from_slice(pose.position.as_slice());
        values.extend_from_slice(&[pose.roll, pose.pitch, pose.yaw]);
        GuessVector {
            mode: Mode::Fk,
            values,
        }
    }

    pub fn pack(mode: Mode, legs: &[LegUnknowns; LEG_COUNT], pose: Option<&EEPose>) -> Result<Self> {
        match (mode, pose) {
            (Mode::Ik, None) => Ok(Self::pack_ik(legs)),
            (Mode::Fk, Some(p)) => Ok(Self::pack_fk(legs, p)),
            (Mode::Ik, Some(_)) => Err(Error::LayoutMismatch {
                expected: "no platform pose for IK".into(),
                got: "platform pose".into(),
            }),
            (Mode::Fk, None) => Err(Error::LayoutMismatch {
                expected: "platform pose for FK".into(),
                got: "none".into(),
            }),
        }
    }

    /// Per-leg unknowns (FK leaves `q1` at zero) and, for FK, the platform pose.
    pub fn unpack(&self) -> ([LegUnknowns; LEG_COUNT], Option<EEPose>) {
        let v = &self.values;
        let stride = self.mode.leg_stride();
        let legs = std::array::from_fn(|i| {
            let b = &v[i * stride..(i + 1) * stride];
            let n0 = Vec3::new(b[0], b[1], b[2]);
            match self.mode {
                Mode::Ik => LegUnknowns {
                    n0,
                    mz0: b[3],
                    q1: b[4],
                    q2: b[5],
                    q3: b[6],
                },
                Mode::Fk => LegUnknowns {
                    n0,
                    mz0: b[3],
                    q1: 0.0,
                    q2: b[4],
                    q3: b[5],
                },
            }
        });
        let pose = match self.mode {
            Mode::Ik => None,
            Mode::Fk => {
                let p = &v[FK_POSE_OFFSET..];
                Some(EEPose::new(Vec3::new(p[0], p[1], p[2]), p[3], p[4], p[5]))
            }
        };
        (legs, pose)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Boundary residual: `[E_F, E_M, E_p (6 x 3), E_m (6 x 3)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualVector {
    values: Vec<f64>,
}

impl ResidualVector {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != SYSTEM_DIM {
            return Err(Error::LayoutMismatch {
                expected: format!("{SYSTEM_DIM} residuals"),
                got: format!("{} residuals", values.len()),
            });
        }
        Ok(ResidualVector { values })
    }

    pub fn assemble(
        force: Vec3,
        moment: Vec3,
        tip_position: &[Vec3; LEG_COUNT],
        tip_moment: &[Vec3; LEG_COUNT],
    ) -> Self {
        let mut values = Vec::with_capacity(SYSTEM_DIM);
        values.extend_from_slice(force.as_slice());
        values.extend_from_slice(moment.as_slice());
        for p in tip_position {
            values.extend_from_slice(p.as_slice());
        }
        for m in tip_moment {
            values.extend_from_slice(m.as_slice());
        }
        ResidualVector { values }
    }

    fn block(&self, offset: usize) -> Vec3 {
        Vec3::new(self.values[offset], self.values[offset + 1], self.values[offset + 2])
    }

    pub fn force(&self) -> Vec3 {
        self.block(0)
    }

    pub fn moment(&self) -> Vec3 {
        self.block(3)
    }

    pub fn tip_position(&self, leg: usize) -> Vec3 {
        self.block(6 + 3 * leg)
    }

    pub fn tip_moment(&self, leg: usize) -> Vec3 {
        self.block(6 + 3 * LEG_COUNT + 3 * leg)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
