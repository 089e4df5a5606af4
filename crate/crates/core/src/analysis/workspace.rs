use std::f64::consts::TAU;

use super::{record, timed, SweepRecord};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::geom3::Vec3;
use crate::mechanism::{EEPose, MechanismConfig, Wrench, LEG_COUNT};
use crate::shooting::{solve_ik, SolveStatus, SolverConfig};

/// Vertical cylinder about the z axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cylinder {
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Cylinder {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("radius", "must be non-negative"));
        }
        if !(self.z_min.is_finite() && self.z_max.is_finite() && self.z_min <= self.z_max) {
            return Err(Error::invalid("z range", "needs finite z_min <= z_max"));
        }
        Ok(())
    }
}

/// Polar grid: `heights` levels, `rings` radii from the axis out to the
/// wall, `sectors` angles per ring. The axis is sampled once per level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridResolution {
    pub heights: usize,
    pub rings: usize,
    pub sectors: usize,
}

impl GridResolution {
    /// A grid of roughly `n` points.
    pub fn for_budget(n: usize) -> Self {
        let n = n.max(1) as f64;
        let heights = n.cbrt().round().max(1.0);
        let per_level = (n / heights).max(1.0);
        // one axis point plus (rings - 1) rings of `sectors` points
        let sectors = (2.0 * per_level.sqrt()).round().clamp(1.0, 64.0);
        let rings = 1.0 + ((per_level - 1.0) / sectors).round().max(0.0);
        GridResolution {
            heights: heights as usize,
            rings: rings as usize,
            sectors: sectors as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights == 0 || self.rings == 0 || self.sectors == 0 {
            return Err(Error::invalid("grid", "every resolution must be positive"));
        }
        Ok(())
    }

    pub fn point_count(&self) -> usize {
        self.heights * (1 + (self.rings - 1) * self.sectors)
    }

    /// Grid points ordered by height, then radius, then angle.
    pub fn points(&self, cyl: &Cylinder) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.point_count());
        for h in 0..self.heights {
            let z = if self.heights > 1 {
                cyl.z_min + (cyl.z_max - cyl.z_min) * h as f64 / (self.heights - 1) as f64
            } else {
                0.5 * (cyl.z_min + cyl.z_max)
            };
            out.push(Vec3::new(0.0, 0.0, z));
            for ring in 1..self.rings {
                let r = cyl.radius * ring as f64 / (self.rings - 1) as f64;
                for s in 0..self.sectors {
                    let (sn, cs) = (TAU * s as f64 / self.sectors as f64).sin_cos();
                    out.push(Vec3::new(r * cs, r * sn, z));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkspacePoint {
    pub position: Vec3,
    pub record: SweepRecord,
}

impl WorkspacePoint {
    /// Converged with every motor angle inside its limits.
    pub fn accepted(&self) -> bool {
        self.record.converged
    }
}

/// Motor-angle envelope of the accepted points at one grid height.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightBin {
    pub z: f64,
    pub samples: usize,
    pub accepted: usize,
    /// Per-leg `(min, max)` motor angle, rad. `None` with nothing accepted.
    pub motor_range: Option<[(f64, f64); LEG_COUNT]>,
}

#[derive(Clone, Debug)]
pub struct WorkspaceAtlas {
    pub cylinder: Cylinder,
    pub grid: GridResolution,
    pub points: Vec<WorkspacePoint>,
    pub bins: Vec<HeightBin>,
}

impl WorkspaceAtlas {
    pub fn accepted_count(&self) -> usize {
        self.points.iter().filter(|p| p.accepted()).count()
    }

    pub fn count_with(&self, status: SolveStatus) -> usize {
        self.points.iter().filter(|p| p.record.status == status).count()
    }
}

/// Cold-started inverse solves at every grid point of the cylinder, with a
/// level platform and the given wrench.
///
/// `exec` distributes grid points; `cfg.exec` still applies inside each
/// solve. Points are independent, so the atlas does not depend on either.
pub fn workspace_sample(
    cyl: &Cylinder,
    grid: &GridResolution,
    wrench: &Wrench,
    mech: &MechanismConfig,
    cfg: &SolverConfig,
    exec: ExecMode,
) -> Result<WorkspaceAtlas> {
    cyl.validate()?;
    grid.validate()?;
    wrench.validate()?;
    mech.validate()?;
    cfg.validate()?;
    let positions = grid.points(cyl);
    let solved = map_indexed(exec, positions.len(), |i| {
        let pose = EEPose::new(positions[i], 0.0, 0.0, 0.0);
        timed(|| solve_ik(&pose, wrench, mech, cfg, None)).map(|t| record(i as f64, &t))
    });
    let points = positions
        .iter()
        .zip(solved)
        .map(|(p, r)| r.map(|record| WorkspacePoint { position: *p, record }))
        .collect::<Result<Vec<_>>>()?;

    let per_level = points.len() / grid.heights;
    let bins = points
        .chunks(per_level)
        .map(|level| {
            let mut range: Option<[(f64, f64); LEG_COUNT]> = None;
            for p in level.iter().filter(|p| p.accepted()) {
                let q = p.record.motor_angles;
                let r = range.get_or_insert(std::array::from_fn(|i| (q[i], q[i])));
                for i in 0..LEG_COUNT {
                    r[i].0 = r[i].0.min(q[i]);
                    r[i].1 = r[i].1.max(q[i]);
                }
            }
            HeightBin {
                z: level[0].position.z,
                samples: level.len(),
                accepted: level.iter().filter(|p| p.accepted()).count(),
                motor_range: range,
            }
        })
        .collect();

    Ok(WorkspaceAtlas {
        cylinder: *cyl,
        grid: *grid,
        points,
        bins,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = GridResolution {
            heights: 3,
            rings: 3,
            sectors: 4,
        };
        let cyl = Cylinder {
            radius: 0.1,
            z_min: 0.3,
            z_max: 0.5,
        };
        let pts = g.points(&cyl);
        assert_eq!(pts.len(), g.point_count());
        assert_eq!(pts.len(), 27);
        assert_eq!(pts[0], Vec3::new(0.0, 0.0, 0.3));
        assert!((pts[5] - Vec3::new(0.1, 0.0, 0.3)).norm() < 1e-15);
        assert!((pts[26].z - 0.5).abs() < 1e-15);
        for p in &pts {
            assert!(p.xy().norm() <= 0.1 + 1e-15);
        }
    }

    #[test]
    fn single_level_uses_mid_height() {
        let g = GridResolution {
            heights: 1,
            rings: 1,
            sectors: 1,
        };
        let pts = g.points(&Cylinder {
            radius: 0.1,
            z_min: 0.2,
            z_max: 0.6,
        });
        assert_eq!(pts, vec![Vec3::new(0.0, 0.0, 0.4)]);
    }

    #[test]
    fn budget_is_roughly_met() {
        for n in [1, 10, 64, 200, 1000, 5000] {
            let g = GridResolution::for_budget(n);
            g.validate().unwrap();
            let c = g.point_count() as f64;
            assert!(c >= 0.5 * n as f64 && c <= 2.0 * n as f64 + 1.0, "{n} -> {g:?} ({c})");
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(Cylinder {
            radius: -1.0,
            z_min: 0.0,
            z_max: 1.0
        }
        .validate()
        .is_err());
        assert!(Cylinder {
            radius: 1.0,
            z_min: 1.0,
            z_max: 0.0
        }
        .validate()
        .is_err());
        assert!(GridResolution {
            heights: 0,
            rings: 1,
            sectors: 1
        }
        .validate()
        .is_err());
    }
}
