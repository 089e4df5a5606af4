use pcr_core::analysis::*;
use pcr_core::mechanism::LEG_COUNT;
use pcr_core::*;

const MIRROR: [usize; LEG_COUNT] = [1, 0, 5, 4, 3, 2];

fn same_record(a: &SweepRecord, b: &SweepRecord) -> bool {
    a.status == b.status
        && a.iterations == b.iterations
        && a.residual_norm.to_bits() == b.residual_norm.to_bits()
        && a.motor_angles.map(f64::to_bits) == b.motor_angles.map(f64::to_bits)
        && a.ee_position.map(f64::to_bits) == b.ee_position.map(f64::to_bits)
}

#[test]
fn stiffness_sweep_is_monotone_and_stops_at_failure() {
    let mech = default_geometry();
    let forces: Vec<f64> = (0..=12).map(|k| 10.0 * k as f64).collect();
    let s = axial_stiffness_sweep(&forces, &mech, &SolverConfig::default()).unwrap();
    let last = s.records.last().unwrap();
    assert!(!last.converged, "load path should end at a limit point");
    assert!(s.records.len() < forces.len());
    let (ok, _) = s.records.split_at(s.records.len() - 1);
    assert!(ok.iter().all(|r| r.converged));
    for w in ok.windows(2) {
        assert!(w[1].ee_height() <= w[0].ee_height());
    }
    assert!(s.stiffness().unwrap() > 0.0);
    assert_eq!(s.max_force, Some(ok.last().unwrap().parameter));
    let fit = s.fit.unwrap();
    assert!(fit.r_squared > 0.0 && fit.r_squared <= 1.0);
}

#[test]
fn unloaded_sweep_has_no_stiffness() {
    let mech = default_geometry();
    let s = axial_stiffness_sweep(&[0.0], &mech, &SolverConfig::default()).unwrap();
    assert_eq!(s.records.len(), 1);
    assert!(s.records[0].converged);
    assert!(s.height_drop(&s.records[0]).abs() < 1e-9);
    assert!(s.stiffness().is_none());
    assert_eq!(s.max_force, Some(0.0));
}

#[test]
fn zero_yaw_matches_rest() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let rest = solve_ik(&mech.rest_pose(), &Wrench::default(), &mech, &cfg, None).unwrap();
    let r = rotation_sweep(&[0.0], &mech, &cfg).unwrap();
    for i in 0..LEG_COUNT {
        assert!((r[0].motor_angles[i] - rest.motor_angles[i]).abs() < 1e-9);
    }
}

#[test]
fn yaw_sweep_reaches_sixty_degrees() {
    let mech = default_geometry();
    let yaws: Vec<f64> = (0..=12).map(|k| (5.0 * k as f64).to_radians()).collect();
    let r = rotation_sweep(&yaws, &mech, &SolverConfig::default()).unwrap();
    assert_eq!(r.len(), yaws.len());
    for rec in &r {
        assert!(rec.converged, "yaw {} deg: {:?}", rec.parameter.to_degrees(), rec.status);
    }
}

#[test]
fn opposite_yaws_mirror_each_other() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let yaws: Vec<f64> = [10.0f64, 20.0, 30.0].iter().map(|d| d.to_radians()).collect();
    let neg: Vec<f64> = yaws.iter().map(|y| -y).collect();
    let pos = rotation_sweep(&yaws, &mech, &cfg).unwrap();
    let negr = rotation_sweep(&neg, &mech, &cfg).unwrap();
    for (a, b) in pos.iter().zip(&negr) {
        for i in 0..LEG_COUNT {
            assert!((a.motor_angles[i] - b.motor_angles[MIRROR[i]]).abs() < 1e-6);
        }
    }
}

#[test]
fn constant_trajectory_is_a_fixed_point() {
    let mech = default_geometry();
    let traj = Trajectory {
        poses: vec![mech.rest_pose(); 4],
        wrench: Wrench::default(),
    };
    let run = follow_trajectory(&traj, &mech, &SolverConfig::default()).unwrap();
    assert_eq!(run.converged_fraction(), 1.0);
    for r in &run.records {
        assert!(r.position_error.unwrap() <= 1e-9);
    }
}

#[test]
fn unloaded_helix_round_trip() {
    let mech = default_geometry();
    let traj = HelixSpec {
        samples: 12,
        ..HelixSpec::around(&mech)
    }
    .trajectory(Wrench::default());
    let run = follow_trajectory(&traj, &mech, &SolverConfig::default()).unwrap();
    assert_eq!(run.converged_fraction(), 1.0);
    assert!(run.max_position_error().unwrap() <= 1e-6);
}

fn small_cylinder(mech: &MechanismConfig) -> Cylinder {
    Cylinder {
        radius: 0.06,
        z_min: mech.rest_height - 0.03,
        z_max: mech.rest_height + 0.03,
    }
}

const GRID: GridResolution = GridResolution {
    heights: 2,
    rings: 2,
    sectors: 6,
};

#[test]
fn far_cylinder_accepts_nothing() {
    let mech = default_geometry();
    let cyl = Cylinder {
        radius: 0.5,
        z_min: 10.0,
        z_max: 10.0,
    };
    let grid = GridResolution {
        heights: 1,
        rings: 2,
        sectors: 3,
    };
    let atlas = workspace_sample(&cyl, &grid, &Wrench::default(), &mech, &SolverConfig::default(), ExecMode::Sequential).unwrap();
    assert_eq!(atlas.points.len(), 4);
    assert_eq!(atlas.accepted_count(), 0);
    assert!(atlas.bins[0].motor_range.is_none());
}

#[test]
fn workspace_atlas_properties() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let cyl = small_cylinder(&mech);
    let atlas = workspace_sample(&cyl, &GRID, &Wrench::default(), &mech, &cfg, ExecMode::Sequential).unwrap();
    assert_eq!(atlas.points.len(), GRID.point_count());
    assert!(atlas.accepted_count() > 0);

    // admissibility does not depend on how the solve was started
    for p in atlas.points.iter().filter(|p| p.accepted()) {
        let pose = EEPose::new(p.position, 0.0, 0.0, 0.0);
        let r = solve_ik(&pose, &Wrench::default(), &mech, &cfg, None).unwrap();
        assert!(r.converged && r.residual_norm <= cfg.residual_tolerance);
        assert!(r.motor_angles.iter().all(|q| mech.motor_limits.contains(*q)));
    }

    // repeated runs, sequential or parallel, give the same atlas
    for exec in [ExecMode::Sequential, ExecMode::Parallel] {
        let again = workspace_sample(&cyl, &GRID, &Wrench::default(), &mech, &cfg, exec).unwrap();
        assert!(atlas.points.iter().zip(&again.points).all(|(a, b)| a.position == b.position && same_record(&a.record, &b.record)));
        assert_eq!(atlas.bins, again.bins);
    }

    // a 120 degree turn of the grid permutes the legs by two
    let per_ring = GRID.sectors;
    for level in 0..GRID.heights {
        let base = level * (1 + per_ring);
        for s in 0..per_ring {
            let a = &atlas.points[base + 1 + s];
            let b = &atlas.points[base + 1 + (s + per_ring / 3) % per_ring];
            assert_eq!(a.accepted(), b.accepted());
            if a.record.status != SolveStatus::NoConvergence {
                for i in 0..LEG_COUNT {
                    let d = a.record.motor_angles[i] - b.record.motor_angles[(i + 2) % LEG_COUNT];
                    assert!(d.abs() < 1e-6, "sector {s} leg {i}: {d}");
                }
            }
        }
    }
}

#[test]
fn warm_chaining_keeps_admissibility() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let cyl = Cylinder {
        radius: 0.12,
        z_min: 0.34,
        z_max: 0.46,
    };
    let grid = GridResolution {
        heights: 2,
        rings: 2,
        sectors: 9,
    };
    let atlas = workspace_sample(&cyl, &grid, &Wrench::default(), &mech, &cfg, ExecMode::Sequential).unwrap();
    assert_eq!(atlas.points.len(), 20);
    let n = atlas.accepted_count();
    assert!(n > 0 && n < 20, "audit needs both outcomes, got {n} accepted");
    let mut warm: Option<GuessVector> = None;
    for p in &atlas.points {
        let pose = EEPose::new(p.position, 0.0, 0.0, 0.0);
        let accepted = match solve_ik(&pose, &Wrench::default(), &mech, &cfg, warm.as_ref()) {
            Ok(r) => {
                let ok = r.converged;
                warm = Some(r.guess);
                ok
            }
            Err(_) => false,
        };
        assert_eq!(accepted, p.accepted(), "at {}", p.position);
    }
}
