use std::path::PathBuf;

use pcr_core::analysis::{
    axial_stiffness_sweep, follow_trajectory, rotation_sweep, workspace_sample, Cylinder, GridResolution, HelixSpec,
};
use pcr_core::mechanism::LEG_COUNT;
use pcr_core::{
    solve_fk, solve_ik, EEPose, Error, ExecMode, MechanismConfig, SolveResult, SolveStatus, Vec3, Wrench,
};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{arr, degrees, motor_columns, num, record_columns, status_name, Outputs};

pub struct Context {
    pub cfg: RunConfig,
    pub mech: MechanismConfig,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Context {
    pub fn new(cfg: RunConfig, out: Option<PathBuf>, jobs: usize) -> Result<Self, CliError> {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        cfg.validate()?;
        let mech = cfg.mechanism.to_config()?;
        let out = out.unwrap_or_else(|| cfg.output_dir.clone());
        Ok(Context { cfg, mech, out, jobs })
    }
}

pub fn wrench(force: [f64; 3], moment: [f64; 3]) -> Wrench {
    Wrench {
        force: force.into(),
        moment: moment.into(),
    }
}

/// The result of a solve that reached the end of the iteration, converged
/// or not, with the error to report afterwards; other errors pass through.
fn settle(r: pcr_core::Result<SolveResult>) -> Result<(SolveResult, Option<CliError>), CliError> {
    match r {
        Ok(res) if res.status == SolveStatus::LimitViolation => {
            let d = degrees(&res.motor_angles);
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let msg = format!("solution needs motor angles in [{lo:.3}, {hi:.3}] deg, outside the limits");
            Ok((res, Some(CliError::LimitViolation(msg))))
        }
        Ok(res) => Ok((res, None)),
        Err(Error::NoConvergence(res)) => {
            let err = CliError::Model(Error::NoConvergence(res.clone()));
            Ok((*res, Some(err)))
        }
        Err(e) => Err(e.into()),
    }
}

fn result_json(r: &SolveResult, w: &Wrench) -> Value {
    let p = &r.ee_pose;
    json!({
        "status": status_name(r.status),
        "converged": r.converged,
        "residual_norm": r.residual_norm,
        "iterations": r.iterations,
        "residual_history": r.residual_history,
        "ee_pose": {
            "position": arr(&p.position),
            "roll_deg": p.roll.to_degrees(),
            "pitch_deg": p.pitch.to_degrees(),
            "yaw_deg": p.yaw.to_degrees(),
        },
        "wrench": { "force": arr(&w.force), "moment": arr(&w.moment) },
        "motor_angles_deg": degrees(&r.motor_angles),
        "motor_angles_rad": r.motor_angles,
        "universal_angles_deg": r.universal_angles.map(|(a, b)| [a.to_degrees(), b.to_degrees()]),
        "base_forces": r.base_wrenches.map(|(n, _)| arr(&n)),
        "base_torsion": r.base_wrenches.map(|(_, mz)| mz),
        "unknowns": r.guess.values(),
    })
}

fn write_centerlines(out: &mut Outputs, name: &str, r: &SolveResult) -> Result<(), CliError> {
    let header = ["leg", "s", "x", "y", "z"].map(String::from);
    let rows = r.centerlines.iter().enumerate().flat_map(|(leg, line)| {
        line.iter().map(move |st| {
            let p = st.position();
            vec![leg.to_string(), num(st.s), num(p.x), num(p.y), num(p.z)]
        })
    });
    out.csv(name, &header, rows)
}

fn solve_summary(r: &SolveResult) -> Value {
    json!({
        "status": status_name(r.status),
        "converged": r.converged,
        "residual_norm": r.residual_norm,
        "iterations": r.iterations,
    })
}

pub fn ik(ctx: &Context, pose: EEPose, w: Wrench) -> Result<(), CliError> {
    let (res, failure) = settle(solve_ik(&pose, &w, &ctx.mech, &ctx.cfg.solver, None))?;
    let mut out = Outputs::create(&ctx.out)?;
    out.json("ik_result.json", &result_json(&res, &w))?;
    write_centerlines(&mut out, "centerlines.csv", &res)?;
    out.manifest("ik", &ctx.cfg, solve_summary(&res))?;
    failure.map_or(Ok(()), Err)
}

pub fn fk(ctx: &Context, angles_deg: [f64; LEG_COUNT], w: Wrench) -> Result<(), CliError> {
    let q = angles_deg.map(f64::to_radians);
    let (res, failure) = settle(solve_fk(&q, &w, &ctx.mech, &ctx.cfg.solver, None))?;
    let mut out = Outputs::create(&ctx.out)?;
    out.json("fk_result.json", &result_json(&res, &w))?;
    write_centerlines(&mut out, "fk_centerlines.csv", &res)?;
    out.manifest("fk", &ctx.cfg, solve_summary(&res))?;
    // FK takes the motor angles as given, so limits are not an error here
    match failure {
        Some(CliError::LimitViolation(_)) | None => Ok(()),
        Some(e) => Err(e),
    }
}

pub fn stiffness(ctx: &Context, forces: &[f64]) -> Result<(), CliError> {
    let sweep = axial_stiffness_sweep(forces, &ctx.mech, &ctx.cfg.solver)?;
    let mut out = Outputs::create(&ctx.out)?;
    let header = [
        "force_N",
        "ee_height_m",
        "converged",
        "residual",
        "wall_s",
        "height_drop_m",
        "status",
        "iterations",
    ]
    .map(String::from);
    let rows = sweep.records.iter().map(|r| {
        vec![
            num(r.parameter),
            num(r.ee_height()),
            r.converged.to_string(),
            num(r.residual_norm),
            num(r.wall_time),
            num(sweep.height_drop(r)),
            status_name(r.status).to_string(),
            r.iterations.to_string(),
        ]
    });
    out.csv("stiffness.csv", &header, rows)?;
    let converged = sweep.records.iter().filter(|r| r.converged).count();
    let fit = sweep.fit.as_ref();
    out.manifest(
        "stiffness",
        &ctx.cfg,
        json!({
            "stiffness_n_per_m": sweep.stiffness(),
            "intercept_n": fit.map(|f| f.intercept),
            "r_squared": fit.map(|f| f.r_squared),
            "max_force_n": sweep.max_force,
            "reference_height_m": sweep.reference_height,
            "motor_angles_deg": degrees(&sweep.motor_angles),
            "samples": sweep.records.len(),
            "converged": converged,
        }),
    )?;
    if converged == 0 {
        return Err(CliError::NoSamples("no load step converged".into()));
    }
    Ok(())
}

pub fn rotation(ctx: &Context, yaws_deg: &[f64]) -> Result<(), CliError> {
    if yaws_deg.is_empty() {
        return Err(CliError::config("no yaw angles given"));
    }
    let yaws: Vec<f64> = yaws_deg.iter().map(|y| y.to_radians()).collect();
    let recs = rotation_sweep(&yaws, &ctx.mech, &ctx.cfg.solver)?;
    let mut out = Outputs::create(&ctx.out)?;
    let mut header: Vec<String> = ["yaw_deg", "converged", "status", "residual", "iterations", "ee_height_m"]
        .map(String::from)
        .to_vec();
    header.extend(motor_columns());
    header.push("wall_s".into());
    let rows = recs.iter().map(|r| {
        let mut row = vec![
            num(r.parameter.to_degrees()),
            r.converged.to_string(),
            status_name(r.status).to_string(),
            num(r.residual_norm),
            r.iterations.to_string(),
            num(r.ee_height()),
        ];
        row.extend(record_columns(r));
        row.push(num(r.wall_time));
        row
    });
    out.csv("rotation.csv", &header, rows)?;
    let ok: Vec<f64> = recs.iter().filter(|r| r.converged).map(|r| r.parameter.to_degrees()).collect();
    out.manifest(
        "rotation",
        &ctx.cfg,
        json!({
            "samples": recs.len(),
            "converged": ok.len(),
            "max_converged_yaw_deg": ok.iter().copied().reduce(f64::max),
            "min_converged_yaw_deg": ok.iter().copied().reduce(f64::min),
        }),
    )?;
    if ok.is_empty() {
        return Err(CliError::NoSamples("no yaw angle converged".into()));
    }
    Ok(())
}

pub fn trajectory(ctx: &Context) -> Result<(), CliError> {
    let t = &ctx.cfg.trajectory;
    let helix = HelixSpec {
        center: t.center.map_or(Vec3::new(0.0, 0.0, ctx.mech.rest_height), Vec3::from),
        radius: t.radius,
        pitch: t.pitch,
        turns: t.turns,
        samples: t.samples,
    };
    let traj = helix.trajectory(wrench(t.force, t.moment));
    let run = follow_trajectory(&traj, &ctx.mech, &ctx.cfg.solver)?;
    let mut out = Outputs::create(&ctx.out)?;
    let mut header: Vec<String> = [
        "index",
        "ref_x",
        "ref_y",
        "ref_z",
        "fk_x",
        "fk_y",
        "fk_z",
        "error_m",
        "converged",
        "status",
        "ik_residual",
        "fk_residual",
        "ik_iterations",
        "fk_iterations",
    ]
    .map(String::from)
    .to_vec();
    header.extend(motor_columns());
    header.push("wall_s".into());
    let nan = f64::NAN;
    let rows = run.records.iter().enumerate().map(|(k, r)| {
        let p = r.reference.position;
        let fk_pos = r.fk.as_ref().map_or([nan; 3], |f| arr(&f.ee_position));
        let mut row = vec![k.to_string(), num(p.x), num(p.y), num(p.z)];
        row.extend(fk_pos.map(num));
        row.extend([
            num(r.position_error.unwrap_or(nan)),
            r.converged().to_string(),
            status_name(r.status()).to_string(),
            num(r.ik.residual_norm),
            num(r.fk.as_ref().map_or(nan, |f| f.residual_norm)),
            r.ik.iterations.to_string(),
            r.fk.as_ref().map_or(String::new(), |f| f.iterations.to_string()),
        ]);
        row.extend(record_columns(&r.ik));
        row.push(num(r.ik.wall_time + r.fk.as_ref().map_or(0.0, |f| f.wall_time)));
        row
    });
    out.csv("trajectory.csv", &header, rows)?;
    let converged = run.records.iter().filter(|r| r.converged()).count();
    out.manifest(
        "trajectory",
        &ctx.cfg,
        json!({
            "samples": run.records.len(),
            "converged": converged,
            "converged_fraction": run.converged_fraction(),
            "max_error_m": run.max_position_error(),
            "wrench": { "force": t.force, "moment": t.moment },
        }),
    )?;
    if converged == 0 {
        return Err(CliError::NoSamples("no trajectory sample converged".into()));
    }
    Ok(())
}

/// Runs `f` on a pool of `jobs` workers, or inline when `jobs` is 1.
fn with_workers<T: Send>(jobs: usize, f: impl FnOnce(ExecMode) -> T + Send) -> Result<T, CliError> {
    #[cfg(feature = "parallel")]
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {jobs} workers: {e}")))?;
        return Ok(pool.install(|| f(ExecMode::Parallel)));
    }
    #[cfg(not(feature = "parallel"))]
    if jobs > 1 {
        eprintln!("built without the `parallel` feature; running sequentially");
    }
    Ok(f(ExecMode::Sequential))
}

pub fn workspace(ctx: &Context, samples: Option<usize>) -> Result<(), CliError> {
    let ws = &ctx.cfg.workspace;
    let cyl = Cylinder {
        radius: ws.radius,
        z_min: ws.z_min,
        z_max: ws.z_max,
    };
    let grid = match samples.or(ws.samples) {
        Some(0) => return Err(CliError::config("workspace sample count must be positive")),
        Some(n) => GridResolution::for_budget(n),
        None => GridResolution {
            heights: ws.heights,
            rings: ws.rings,
            sectors: ws.sectors,
        },
    };
    let w = wrench(ws.force, ws.moment);
    let atlas =
        with_workers(ctx.jobs, |exec| workspace_sample(&cyl, &grid, &w, &ctx.mech, &ctx.cfg.solver, exec))??;

    let mut out = Outputs::create(&ctx.out)?;
    let mut header: Vec<String> = ["x", "y", "z", "accepted", "status", "residual", "iterations"]
        .map(String::from)
        .to_vec();
    header.extend(motor_columns());
    header.push("wall_s".into());
    let rows = atlas.points.iter().map(|p| {
        let r = &p.record;
        let mut row = vec![
            num(p.position.x),
            num(p.position.y),
            num(p.position.z),
            p.accepted().to_string(),
            status_name(r.status).to_string(),
            num(r.residual_norm),
            r.iterations.to_string(),
        ];
        row.extend(record_columns(r));
        row.push(num(r.wall_time));
        row
    });
    out.csv("workspace.csv", &header, rows)?;

    let header = ["z_m", "samples", "accepted", "leg", "q_min_deg", "q_max_deg"].map(String::from);
    let rows = atlas.bins.iter().flat_map(|b| {
        (0..LEG_COUNT).map(move |leg| {
            let (lo, hi) = b.motor_range.map_or((f64::NAN, f64::NAN), |r| r[leg]);
            vec![
                num(b.z),
                b.samples.to_string(),
                b.accepted.to_string(),
                leg.to_string(),
                num(lo.to_degrees()),
                num(hi.to_degrees()),
            ]
        })
    });
    out.csv("workspace_bins.csv", &header, rows)?;

    let n = atlas.points.len();
    let accepted = atlas.accepted_count();
    out.manifest(
        "workspace",
        &ctx.cfg,
        json!({
            "samples": n,
            "accepted": accepted,
            "acceptance_fraction": accepted as f64 / n as f64,
            "limit_violation": atlas.count_with(SolveStatus::LimitViolation),
            "no_convergence": atlas.count_with(SolveStatus::NoConvergence),
            "grid": { "heights": grid.heights, "rings": grid.rings, "sectors": grid.sectors },
            "jobs": ctx.jobs,
        }),
    )?;
    if accepted == 0 {
        return Err(CliError::NoSamples("no workspace sample was accepted".into()));
    }
    Ok(())
}
