use pcr_core::mechanism::{Mode, LEG_COUNT, SYSTEM_DIM};
use pcr_core::shooting::{
    fd_jacobian_with, fk_guess_from, DifferenceScheme, FdOptions, ShootingProblem, Target,
};
use pcr_core::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const MIRROR: [usize; LEG_COUNT] = [1, 0, 5, 4, 3, 2];

fn rest_ik(mech: &MechanismConfig, cfg: &SolverConfig) -> SolveResult {
    solve_ik(&mech.rest_pose(), &Wrench::default(), mech, cfg, None).unwrap()
}

#[test]
fn rest_ik_is_symmetric() {
    let mech = default_geometry();
    let r = rest_ik(&mech, &SolverConfig::default());
    assert!(r.converged);
    assert!(r.residual_norm <= 5e-10);
    for i in 0..LEG_COUNT {
        assert!((r.motor_angles[i] - r.motor_angles[0]).abs() < 1e-6);
        assert!((r.motor_angles[i] - r.motor_angles[MIRROR[i]]).abs() < 1e-6);
        let (q2, q3) = r.universal_angles[i];
        let (m2, m3) = r.universal_angles[MIRROR[i]];
        assert!((q2 - m2).abs() < 1e-6 && (q3 + m3).abs() < 1e-6);
    }
}

#[test]
fn loaded_ik_balances_the_platform() {
    let mech = default_geometry();
    let w = Wrench::force(Vec3::new(0.0, 0.0, -5.0));
    let r = solve_ik(&mech.rest_pose(), &w, &mech, &SolverConfig::default(), None).unwrap();
    assert!(r.converged);
    assert!(r.residual.force().amax() <= 5e-10 && r.residual.moment().amax() <= 5e-10);
}

#[test]
fn global_statics_hold_at_convergence() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let w = Wrench {
        force: Vec3::new(1.0, -0.5, -5.0),
        moment: Vec3::new(0.02, 0.0, -0.05),
    };
    let pose = EEPose::new(Vec3::new(0.02, -0.01, 0.41), 0.05, -0.03, 0.2);
    let ik = solve_ik(&pose, &w, &mech, &cfg, None).unwrap();
    let fk = solve_fk(&ik.motor_angles, &w, &mech, &cfg, None).unwrap();
    for r in [&ik, &fk] {
        let base: Vec3 = r.base_wrenches.iter().map(|(n, _)| *n).sum();
        let gap = base - w.force - mech.rod_weight() - mech.ee_weight();
        assert!(gap.norm() <= 1e-7, "{gap}");
        for (leg, tip) in r.tips().unwrap().iter().enumerate() {
            assert!(tip.m.norm() <= 1e-9, "leg {leg}: {}", tip.m.norm());
        }
        // the universal joint passes torsion only
        for line in &r.centerlines {
            let local = line[0].rotation().matrix().tr_mul(&line[0].m);
            assert!(local.x.abs() < 1e-15 && local.y.abs() < 1e-15);
        }
    }
}

#[test]
fn unreachable_pose_does_not_converge() {
    let mech = default_geometry();
    let pose = EEPose::new(Vec3::new(0.0, 0.0, 10.0), 0.0, 0.0, 0.0);
    match solve_ik(&pose, &Wrench::default(), &mech, &SolverConfig::default(), None) {
        Err(Error::NoConvergence(r)) => {
            assert!(!r.converged);
            assert_eq!(r.status, SolveStatus::NoConvergence);
        }
        other => panic!("expected NoConvergence, got {:?}", other.map(|r| r.status)),
    }
}

#[test]
fn out_of_range_motor_angle_is_flagged() {
    let mech = default_geometry();
    let pose = EEPose::new(Vec3::new(0.2, 0.0, 0.4), 0.0, 0.0, 0.0);
    let r = solve_ik(&pose, &Wrench::default(), &mech, &SolverConfig::default(), None).unwrap();
    assert_eq!(r.status, SolveStatus::LimitViolation);
    assert!(!r.converged);
    assert!(r.residual_norm <= 5e-10);
    assert!(r.motor_angles.iter().any(|q| !mech.motor_limits.contains(*q)));
}

#[test]
fn equal_motor_angles_center_the_platform() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    for q in [10.0f64, 28.0, 45.0] {
        let r = solve_fk(&[q.to_radians(); LEG_COUNT], &Wrench::default(), &mech, &cfg, None).unwrap();
        assert!(r.converged);
        let p = r.ee_pose.position;
        assert!(p.x.abs() <= 1e-8 && p.y.abs() <= 1e-8, "q = {q}: {p}");
        assert!(r.ee_pose.yaw.abs() <= 1e-8 && r.ee_pose.roll.abs() <= 1e-8 && r.ee_pose.pitch.abs() <= 1e-8);
    }
}

#[test]
fn fk_rejects_nan_angles() {
    let mech = default_geometry();
    let mut q = [0.5; LEG_COUNT];
    q[3] = f64::NAN;
    assert!(matches!(
        solve_fk(&q, &Wrench::default(), &mech, &SolverConfig::default(), None),
        Err(Error::InvalidParameter { .. })
    ));
}

#[test]
fn ik_fk_round_trip() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let w = Wrench::force(Vec3::new(0.0, 0.0, -5.0));
    for pose in [
        EEPose::new(Vec3::new(0.03, 0.0, 0.39), 0.0, 0.0, 0.0),
        EEPose::new(Vec3::new(-0.02, 0.04, 0.42), 0.0, 0.0, 0.3),
        EEPose::new(Vec3::new(0.0, -0.03, 0.40), 0.05, 0.05, -0.2),
    ] {
        let ik = solve_ik(&pose, &w, &mech, &cfg, None).unwrap();
        let fk = solve_fk(&ik.motor_angles, &w, &mech, &cfg, None).unwrap();
        assert!((fk.ee_pose.position - pose.position).norm() <= 1e-6);
        assert!((fk.ee_pose.rotation().matrix() - pose.rotation().matrix()).norm() <= 1e-6);
    }
}

#[test]
fn warm_resolve_is_immediate() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let ik = rest_ik(&mech, &cfg);
    let again = solve_ik(&mech.rest_pose(), &Wrench::default(), &mech, &cfg, Some(&ik.guess)).unwrap();
    assert!(again.iterations <= 2);
    let fk = solve_fk(&ik.motor_angles, &Wrench::default(), &mech, &cfg, Some(&fk_guess_from(&ik))).unwrap();
    assert!(fk.iterations <= 2);
    assert!((fk.ee_pose.position - mech.rest_pose().position).norm() < 1e-9);
}

#[test]
fn warm_start_layout_is_checked() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let ik = rest_ik(&mech, &cfg);
    let r = solve_fk(&ik.motor_angles, &Wrench::default(), &mech, &cfg, Some(&ik.guess));
    assert!(matches!(r, Err(Error::LayoutMismatch { .. })));
}

#[test]
fn sequential_solves_are_deterministic() {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let pose = EEPose::new(Vec3::new(0.02, 0.01, 0.4), 0.0, 0.0, 0.1);
    let a = solve_ik(&pose, &Wrench::default(), &mech, &cfg, None).unwrap();
    let b = solve_ik(&pose, &Wrench::default(), &mech, &cfg, None).unwrap();
    assert_eq!(bits(&a.residual_history), bits(&b.residual_history));
    assert_eq!(bits(a.guess.values()), bits(b.guess.values()));
}

#[test]
fn parallel_execution_matches_sequential_bitwise() {
    let mech = default_geometry();
    let seq = SolverConfig::default();
    let par = SolverConfig {
        exec: ExecMode::Parallel,
        ..seq
    };
    let pose = EEPose::new(Vec3::new(0.02, 0.01, 0.4), 0.0, 0.0, 0.1);
    let a = solve_ik(&pose, &Wrench::default(), &mech, &seq, None).unwrap();
    let b = solve_ik(&pose, &Wrench::default(), &mech, &par, None).unwrap();
    assert_eq!(bits(&a.residual_history), bits(&b.residual_history));
    assert_eq!(bits(a.guess.values()), bits(b.guess.values()));
    assert_eq!(a.iterations, b.iterations);
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

fn problem_near_solution(mode: Mode, seed: u64) -> (MechanismConfig, SolveResult, Vec<Vec<f64>>) {
    let mech = default_geometry();
    let cfg = SolverConfig::default();
    let ik = solve_ik(
        &EEPose::new(Vec3::new(0.01, -0.02, 0.4), 0.0, 0.0, 0.15),
        &Wrench::force(Vec3::new(0.0, 0.0, -5.0)),
        &mech,
        &cfg,
        None,
    )
    .unwrap();
    let x0 = match mode {
        Mode::Ik => ik.guess.values().to_vec(),
        Mode::Fk => fk_guess_from(&ik).into_values(),
    };
    let mut rng = StdRng::seed_from_u64(seed);
    let points = (0..5)
        .map(|_| x0.iter().map(|v| v + 1e-3 * (1.0 + v.abs()) * rng.random_range(-1.0..1.0)).collect())
        .collect();
    (mech, ik, points)
}

#[test]
fn structured_jacobian_equals_generic_differences() {
    for mode in [Mode::Ik, Mode::Fk] {
        let (mech, ik, points) = problem_near_solution(mode, 7);
        let target = match mode {
            Mode::Ik => Target::Ik(ik.ee_pose),
            Mode::Fk => Target::Fk(ik.motor_angles),
        };
        let p = ShootingProblem::new(&mech, target, Wrench::force(Vec3::new(0.0, 0.0, -5.0)), IntegratorConfig::default());
        let x = &points[0];
        let b = GuessVector::from_values(mode, x.clone()).unwrap();
        let fd = FdOptions::default();
        let structured = p.jacobian_matrix(&b, None, &fd).unwrap();
        let generic = fd_jacobian_with(
            |y| Ok(p.residual_vector(&GuessVector::from_values(mode, y.to_vec())?)?.values().to_vec()),
            x,
            None,
            &fd,
        )
        .unwrap();
        assert_eq!(structured.shape(), (SYSTEM_DIM, SYSTEM_DIM));
        assert!(structured.iter().zip(generic.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn jacobian_block_sparsity() {
    for mode in [Mode::Ik, Mode::Fk] {
        let (mech, ik, points) = problem_near_solution(mode, 11);
        let target = match mode {
            Mode::Ik => Target::Ik(ik.ee_pose),
            Mode::Fk => Target::Fk(ik.motor_angles),
        };
        let p = ShootingProblem::new(&mech, target, Wrench::default(), IntegratorConfig::default());
        let b = GuessVector::from_values(mode, points[0].clone()).unwrap();
        let j = p.jacobian_matrix(&b, None, &FdOptions::default()).unwrap();
        for col in 0..SYSTEM_DIM {
            let owner = mode.leg_of_unknown(col);
            for leg in 0..LEG_COUNT {
                if owner.is_some_and(|o| o == leg) || owner.is_none() {
                    continue;
                }
                for row in (6 + 3 * leg..9 + 3 * leg).chain(24 + 3 * leg..27 + 3 * leg) {
                    assert_eq!(j[(row, col)], 0.0, "{mode:?} row {row} col {col}");
                }
            }
        }
        // the tip blocks of a leg do react to its own unknowns
        for leg in 0..LEG_COUNT {
            let col = leg * mode.leg_stride();
            assert!(j.view((24 + 3 * leg, col), (3, 1)).amax() > 0.0 || j.view((6 + 3 * leg, col), (3, 1)).amax() > 0.0);
        }
    }
}

#[test]
fn forward_and_central_jacobians_agree_to_first_order() {
    let (mech, ik, points) = problem_near_solution(Mode::Ik, 3);
    let p = ShootingProblem::new(&mech, Target::Ik(ik.ee_pose), Wrench::force(Vec3::new(0.0, 0.0, -5.0)), IntegratorConfig::default());
    for x in &points {
        let b = GuessVector::from_values(Mode::Ik, x.clone()).unwrap();
        let jac = |scheme, step| {
            p.jacobian_matrix(
                &b,
                None,
                &FdOptions {
                    step,
                    scheme,
                    exec: ExecMode::Sequential,
                },
            )
            .unwrap()
        };
        let gap = |step| {
            let c = jac(DifferenceScheme::Central, step);
            (jac(DifferenceScheme::Forward, step) - &c).amax() / c.amax()
        };
        let (g1, g2) = (gap(1e-4), gap(1e-5));
        let ratio = g1 / g2;
        assert!(g2 < 1e-4, "gap {g2}");
        assert!((5.0..20.0).contains(&ratio), "ratio {ratio} (gaps {g1}, {g2})");
    }
}
