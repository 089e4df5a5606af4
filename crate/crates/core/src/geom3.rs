//! Rotation and rigid-transform primitives.
//!
//! Roll-pitch-yaw angles follow the extrinsic X-Y-Z convention,
//! `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Symmetry tolerance accepted by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-12;
/// Orthonormality tolerance accepted by [`Rot3::new`].
pub const ROTATION_TOLERANCE: f64 = 1e-9;
/// [`rotation_to_rpy`] rejects rotations with `|cos(pitch)|` below this.
pub const GIMBAL_THRESHOLD: f64 = 1e-6;

/// Skew-symmetric matrix with `hat(u) * w == u.cross(&w)`.
pub fn hat(u: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -u.z, u.y, //
        u.z, 0.0, -u.x, //
        -u.y, u.x, 0.0,
    )
}

/// Inverse of [`hat`].
pub fn vee(s: &Mat3) -> Result<Vec3> {
    let asym = (s + s.transpose()).abs().max();
    if asym > SKEW_TOLERANCE {
        return Err(Error::NonSkewInput(asym));
    }
    Ok(Vec3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)]))
}

pub fn rot_x(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Frobenius norm of `R^T R - I`.
pub fn orthonormality_error(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).norm()
}

/// A proper rotation matrix.
///
/// Integrated rod frames drift slightly off SO(3); those are carried with
/// [`Rot3::from_matrix_unchecked`] and monitored through
/// [`Rot3::orthonormality_error`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rot3(Mat3);

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Mat3::identity())
    }

    pub fn new(m: Mat3) -> Result<Self> {
        let ortho = orthonormality_error(&m);
        let det = m.determinant();
        let dev = ortho.max((det - 1.0).abs());
        if !dev.is_finite() || dev > ROTATION_TOLERANCE {
            return Err(Error::NotARotation(dev));
        }
        Ok(Rot3(m))
    }

    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Rot3(m)
    }

    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        rpy_to_rotation(roll, pitch, yaw)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Rot3(self.0.transpose())
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }

    pub fn to_rpy(&self) -> Result<(f64, f64, f64)> {
        rotation_to_rpy(self)
    }
}

impl std::ops::Mul for Rot3 {
    type Output = Rot3;
    fn mul(self, rhs: Rot3) -> Rot3 {
        Rot3(self.0 * rhs.0)
    }
}

impl std::ops::Mul<Vec3> for Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl std::ops::Mul<&Vec3> for &Rot3 {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

pub fn rpy_to_rotation(roll: f64, pitch: f64, yaw: f64) -> Rot3 {
    Rot3(rot_z(yaw) * rot_y(pitch) * rot_x(roll))
}

/// Recovers `(roll, pitch, yaw)` with pitch in `(-pi/2, pi/2)`.
pub fn rotation_to_rpy(r: &Rot3) -> Result<(f64, f64, f64)> {
    let m = r.matrix();
    let cos_pitch = m[(0, 0)].hypot(m[(1, 0)]);
    if cos_pitch < GIMBAL_THRESHOLD {
        return Err(Error::GimbalLock(cos_pitch));
    }
    let pitch = (-m[(2, 0)]).atan2(cos_pitch);
    let yaw = m[(1, 0)].atan2(m[(0, 0)]);
    let roll = m[(2, 1)].atan2(m[(2, 2)]);
    Ok((roll, pitch, yaw))
}

/// Rigid transform `x -> rotation * x + position`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rot3,
    pub position: Vec3,
}

impl Pose {
    pub fn new(rotation: Rot3, position: Vec3) -> Self {
        Pose { rotation, position }
    }

    pub fn identity() -> Self {
        Pose::new(Rot3::identity(), Vec3::zeros())
    }

    pub fn transform_point(&self, x: &Vec3) -> Vec3 {
        self.rotation.matrix() * x + self.position
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            position: self.transform_point(&other.position),
        }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            position: -(rt.matrix() * self.position),
        }
    }
}
