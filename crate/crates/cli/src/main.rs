//! `pcr`: kinetostatics runs for the 6-RUS parallel continuum robot.
//!
//! Exit codes: 0 success, 1 bad configuration or input, 2 solver did not
//! converge, 3 no sample of a study converged, 4 solved outside the motor
//! limits. Failures also print a JSON object on stderr.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcr_core::{EEPose, Vec3};

use crate::commands::{wrench, Context};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "pcr", version, about = "Cosserat-rod kinetostatics of a 6-RUS parallel continuum robot")]
#[command(allow_negative_numbers = true, arg_required_else_help = true)]
struct Cli {
    /// Run configuration (TOML). Defaults apply to anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for workspace sampling. 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Residual tolerance; overrides `solver.residual_tolerance`.
    #[arg(long, global = true)]
    tolerance: Option<f64>,

    /// Write the default configuration to PATH and exit.
    #[arg(long, value_name = "PATH")]
    seed_geometry: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Clone)]
struct LoadArgs {
    /// Force on the platform, N.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.0])]
    force: Vec<f64>,

    /// Moment on the platform, N m.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.0])]
    moment: Vec<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Motor angles for a platform pose.
    #[command(allow_negative_numbers = true)]
    Ik {
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Defaults to the rest height.
        #[arg(long)]
        z: Option<f64>,
        /// Degrees.
        #[arg(long, default_value_t = 0.0)]
        roll: f64,
        /// Degrees.
        #[arg(long, default_value_t = 0.0)]
        pitch: f64,
        /// Degrees.
        #[arg(long, default_value_t = 0.0)]
        yaw: f64,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Platform pose for six motor angles.
    #[command(allow_negative_numbers = true)]
    Fk {
        /// Six motor angles, degrees.
        #[arg(long, value_delimiter = ',', required = true)]
        angles: Vec<f64>,
        #[command(flatten)]
        load: LoadArgs,
    },
    /// Height under increasing vertical load with the motors locked at rest.
    #[command(allow_negative_numbers = true)]
    Stiffness {
        /// Loads in N; overrides `stiffness.forces`.
        #[arg(long, value_delimiter = ',')]
        forces: Option<Vec<f64>>,
    },
    /// IK along a sweep of yaw angles about the rest pose.
    #[command(allow_negative_numbers = true)]
    Rotation {
        /// Degrees; overrides `rotation.yaw_deg`.
        #[arg(long, value_delimiter = ',')]
        yaws: Option<Vec<f64>>,
    },
    /// IK then FK along the configured helix.
    Trajectory,
    /// Admissibility over the configured cylinder.
    Workspace {
        /// About this many grid points; overrides the configured grid.
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn vec3(name: &str, v: &[f64]) -> Result<[f64; 3], CliError> {
    v.try_into().map_err(|_| CliError::config(format!("--{name} needs three values, got {}", v.len())))
}

fn load_wrench(load: &LoadArgs) -> Result<pcr_core::Wrench, CliError> {
    Ok(wrench(vec3("force", &load.force)?, vec3("moment", &load.moment)?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(path) = &cli.seed_geometry {
        let text = RunConfig::default().to_toml();
        return std::fs::write(path, text).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e));
    }
    let Some(command) = cli.command else {
        return Err(CliError::config("no command given"));
    };

    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.tolerance {
        cfg.solver.residual_tolerance = t;
    }
    let ctx = Context::new(cfg, cli.out, cli.jobs)?;

    match command {
        Command::Ik {
            x,
            y,
            z,
            roll,
            pitch,
            yaw,
            load,
        } => {
            let z = z.unwrap_or(ctx.mech.rest_height);
            let pose = EEPose::new(Vec3::new(x, y, z), roll.to_radians(), pitch.to_radians(), yaw.to_radians());
            commands::ik(&ctx, pose, load_wrench(&load)?)
        }
        Command::Fk { angles, load } => {
            let q: [f64; 6] = angles.try_into().map_err(|a: Vec<f64>| CliError::config(format!("--angles needs six values, got {}", a.len())))?;
            commands::fk(&ctx, q, load_wrench(&load)?)
        }
        Command::Stiffness { forces } => {
            let forces = forces.unwrap_or_else(|| ctx.cfg.stiffness.forces.clone());
            commands::stiffness(&ctx, &forces)
        }
        Command::Rotation { yaws } => {
            let yaws = yaws.unwrap_or_else(|| ctx.cfg.rotation.yaw_deg.clone());
            commands::rotation(&ctx, &yaws)
        }
        Command::Trajectory => commands::trajectory(&ctx),
        Command::Workspace { samples } => commands::workspace(&ctx, samples),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let msg = e.render().to_string();
            let err = CliError::config(msg.lines().next().unwrap_or("invalid arguments").to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
