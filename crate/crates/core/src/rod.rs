//! Single Cosserat rod: linear constitutive law, static equilibrium ODEs and
//! base-to-tip integration.
//!
//! Forces `n` and moments `m` are internal and expressed in the world frame.
//! Strains `v` (linear) and `u` (angular) live in the material frame:
//!
//! ```text
//! p' = R v        R' = R hat(u)
//! n' = -f         m' = -p' x n
//! n = R K_se (v - v*)      m = R K_bt (u - u*)
//! ```
//!
//! Distributed moments are not modelled.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom3::{hat, Mat3, Pose, Rot3, Vec3};
use crate::ode::{self, IntegratorConfig};

/// Size of the packed ODE state: position, 9 rotation entries, force, moment.
pub const STATE_DIM: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub diameter: f64,
}

impl CrossSection {
    pub fn circular(diameter: f64) -> Result<Self> {
        let s = CrossSection { diameter };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > 0.0 && self.diameter.is_finite()) {
            return Err(Error::invalid("diameter", "must be positive"));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        PI * self.diameter.powi(2) / 4.0
    }

    /// Second moment of area about either bending axis.
    pub fn second_moment(&self) -> f64 {
        PI * self.diameter.powi(4) / 64.0
    }

    pub fn polar_moment(&self) -> f64 {
        2.0 * self.second_moment()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Pa
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    /// kg/m^3
    pub density: f64,
}

impl Material {
    /// Ti-6Al-4V.
    pub fn titanium_alloy() -> Self {
        Material {
            youngs_modulus: 110.3e9,
            poisson_ratio: 0.31,
            density: 4428.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0 && self.youngs_modulus.is_finite()) {
            return Err(Error::invalid("youngs_modulus", "must be positive"));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::invalid("poisson_ratio", "must lie in (-1, 0.5)"));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::invalid("density", "must be positive"));
        }
        Ok(())
    }
}

/// Isotropic relation `G = E / (2 (1 + nu))`.
pub fn shear_modulus(material: &Material) -> f64 {
    material.youngs_modulus / (2.0 * (1.0 + material.poisson_ratio))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodParams {
    /// Unstressed length, m.
    pub length: f64,
    pub section: CrossSection,
    pub material: Material,
    /// Reference linear strain, constant along the rod.
    pub v_star: Vec3,
    /// Reference curvature (1/m), constant along the rod.
    pub u_star: Vec3,
    /// m/s^2, world frame.
    pub gravity: Vec3,
}

impl RodParams {
    /// Straight, unloaded reference with no gravity.
    pub fn straight(length: f64, section: CrossSection, material: Material) -> Self {
        RodParams {
            length,
            section,
            material,
            v_star: Vec3::z(),
            u_star: Vec3::zeros(),
            gravity: Vec3::zeros(),
        }
    }

    /// Rod bent at rest into an arc of `radius` about its local x-axis.
    pub fn precurved(length: f64, radius: f64, section: CrossSection, material: Material) -> Self {
        RodParams {
            u_star: Vec3::new(1.0 / radius, 0.0, 0.0),
            ..Self::straight(length, section, material)
        }
    }

    pub fn with_gravity(mut self, gravity: Vec3) -> Self {
        self.gravity = gravity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("length", "must be positive"));
        }
        self.section.validate()?;
        self.material.validate()?;
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !finite(&self.v_star) || !finite(&self.u_star) || !finite(&self.gravity) {
            return Err(Error::invalid("reference strains", "must be finite"));
        }
        Ok(())
    }

    pub fn mass_per_length(&self) -> f64 {
        self.material.density * self.section.area()
    }
}

/// Diagonals of the shear/extension and bending/torsion stiffness matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StiffnessMatrices {
    /// `(GA, GA, EA)`, N.
    pub shear_extension: Vec3,
    /// `(EI, EI, GJ)`, N m^2.
    pub bending_torsion: Vec3,
}

impl StiffnessMatrices {
    pub fn k_se(&self) -> Mat3 {
        Mat3::from_diagonal(&self.shear_extension)
    }

    pub fn k_bt(&self) -> Mat3 {
        Mat3::from_diagonal(&self.bending_torsion)
    }
}

pub fn stiffness_matrices(params: &RodParams) -> StiffnessMatrices {
    let e = params.material.youngs_modulus;
    let g = shear_modulus(&params.material);
    let a = params.section.area();
    let i = params.section.second_moment();
    let j = params.section.polar_moment();
    StiffnessMatrices {
        shear_extension: Vec3::new(g * a, g * a, e * a),
        bending_torsion: Vec3::new(e * i, e * i, g * j),
    }
}

/// Self-weight per unit length, `rho A g`.
pub fn distributed_load(params: &RodParams) -> Vec3 {
    params.mass_per_length() * params.gravity
}

/// Inverts the constitutive law: `(v, u)` from the world-frame wrench.
pub fn strains_from_wrench(r: &Rot3, n: &Vec3, m: &Vec3, params: &RodParams) -> (Vec3, Vec3) {
    RodModel::new(params).strains(r.matrix(), n, m)
}

/// Forward constitutive law: world-frame `(n, m)` from material strains.
pub fn wrench_from_strains(r: &Rot3, v: &Vec3, u: &Vec3, params: &RodParams) -> (Vec3, Vec3) {
    let k = stiffness_matrices(params);
    let n = r.matrix() * k.shear_extension.component_mul(&(v - params.v_star));
    let m = r.matrix() * k.bending_torsion.component_mul(&(u - params.u_star));
    (n, m)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RodState {
    /// Arc coordinate in the unstressed configuration, m.
    pub s: f64,
    pub pose: Pose,
    pub n: Vec3,
    pub m: Vec3,
}

impl RodState {
    pub fn position(&self) -> Vec3 {
        self.pose.position
    }

    pub fn rotation(&self) -> &Rot3 {
        &self.pose.rotation
    }

    pub fn pack(&self) -> [f64; STATE_DIM] {
        let mut y = [0.0; STATE_DIM];
        y[0..3].copy_from_slice(self.pose.position.as_slice());
        let r = self.pose.rotation.matrix();
        for row in 0..3 {
            for col in 0..3 {
                y[3 + 3 * row + col] = r[(row, col)];
            }
        }
        y[12..15].copy_from_slice(self.n.as_slice());
        y[15..18].copy_from_slice(self.m.as_slice());
        y
    }

    pub fn unpack(s: f64, y: &[f64; STATE_DIM]) -> Self {
        let r = Mat3::from_row_slice(&y[3..12]);
        RodState {
            s,
            pose: Pose::new(
                Rot3::from_matrix_unchecked(r),
                Vec3::new(y[0], y[1], y[2]),
            ),
            n: Vec3::new(y[12], y[13], y[14]),
            m: Vec3::new(y[15], y[16], y[17]),
        }
    }
}

/// Arc-length derivatives of the rod state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RodStateDerivative {
    pub dp: Vec3,
    pub dr: Mat3,
    pub dn: Vec3,
    pub dm: Vec3,
}

/// Per-rod constants hoisted out of the ODE right-hand side.
#[derive(Clone, Copy, Debug)]
struct RodModel {
    se_inv: Vec3,
    bt_inv: Vec3,
    v_star: Vec3,
    u_star: Vec3,
    f: Vec3,
}

impl RodModel {
    fn new(params: &RodParams) -> Self {
        let k = stiffness_matrices(params);
        RodModel {
            se_inv: k.shear_extension.map(|x| 1.0 / x),
            bt_inv: k.bending_torsion.map(|x| 1.0 / x),
            v_star: params.v_star,
            u_star: params.u_star,
            f: distributed_load(params),
        }
    }

    fn strains(&self, r: &Mat3, n: &Vec3, m: &Vec3) -> (Vec3, Vec3) {
        let v = self.se_inv.component_mul(&(r.tr_mul(n))) + self.v_star;
        let u = self.bt_inv.component_mul(&(r.tr_mul(m))) + self.u_star;
        (v, u)
    }

    fn derivative(&self, r: &Mat3, n: &Vec3, m: &Vec3) -> RodStateDerivative {
        let (v, u) = self.strains(r, n, m);
        let dp = r * v;
        RodStateDerivative {
            dp,
            dr: r * hat(&u),
            dn: -self.f,
            dm: -dp.cross(n),
        }
    }

    fn rhs(&self, y: &[f64; STATE_DIM]) -> [f64; STATE_DIM] {
        let r = Mat3::from_row_slice(&y[3..12]);
        let n = Vec3::new(y[12], y[13], y[14]);
        let m = Vec3::new(y[15], y[16], y[17]);
        let d = self.derivative(&r, &n, &m);
        let mut out = [0.0; STATE_DIM];
        out[0..3].copy_from_slice(d.dp.as_slice());
        for row in 0..3 {
            for col in 0..3 {
                out[3 + 3 * row + col] = d.dr[(row, col)];
            }
        }
        out[12..15].copy_from_slice(d.dn.as_slice());
        out[15..18].copy_from_slice(d.dm.as_slice());
        out
    }
}

pub fn rod_ode_rhs(state: &RodState, params: &RodParams) -> RodStateDerivative {
    RodModel::new(params).derivative(state.pose.rotation.matrix(), &state.n, &state.m)
}

#[derive(Clone, Debug)]
pub struct RodSolution {
    pub tip: RodState,
    /// Uniformly spaced states from base to tip (empty when sampling is off).
    pub samples: Vec<RodState>,
    pub steps: usize,
}

/// Integrates the rod from its base (`s = 0`) to its tip (`s = length`).
pub fn integrate_rod(
    base: &Pose,
    n0: &Vec3,
    m0: &Vec3,
    params: &RodParams,
    cfg: &IntegratorConfig,
) -> Result<RodSolution> {
    let model = RodModel::new(params);
    let length = params.length;
    let y0 = RodState {
        s: 0.0,
        pose: *base,
        n: *n0,
        m: *m0,
    }
    .pack();
    let sample_at: Vec<f64> = if cfg.samples >= 2 {
        let last = cfg.samples - 1;
        (0..cfg.samples)
            .map(|k| if k == last { length } else { length * k as f64 / last as f64 })
            .collect()
    } else {
        Vec::new()
    };
    let sol = ode::integrate(|_, y| model.rhs(y), 0.0, length, y0, cfg, &sample_at)?;
    Ok(RodSolution {
        tip: RodState::unpack(length, &sol.y_end),
        samples: sol
            .samples
            .iter()
            .map(|(s, y)| RodState::unpack(*s, y))
            .collect(),
        steps: sol.accepted_steps + sol.rejected_steps,
    })
}

/// Base-to-tip vector of the unloaded, weightless rod in its base frame.
pub fn natural_chord(params: &RodParams, cfg: &IntegratorConfig) -> Result<Vec3> {
    let unloaded = params.with_gravity(Vec3::zeros());
    let sol = integrate_rod(
        &Pose::identity(),
        &Vec3::zeros(),
        &Vec3::zeros(),
        &unloaded,
        &cfg.without_samples(),
    )?;
    Ok(sol.tip.position())
}
