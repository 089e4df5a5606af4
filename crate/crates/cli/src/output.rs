//! CSV and JSON writers. Floats in CSV are `{:.16e}`, which round-trips.

use std::fs::File;
use std::path::{Path, PathBuf};

use pcr_core::analysis::SweepRecord;
use pcr_core::mechanism::LEG_COUNT;
use pcr_core::{SolveStatus, Vec3};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::LimitViolation => "limit_violation",
        SolveStatus::NoConvergence => "no_convergence",
    }
}

pub fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub fn degrees(q: &[f64; LEG_COUNT]) -> [f64; LEG_COUNT] {
    q.map(f64::to_degrees)
}

/// Header names `q1_deg` .. `q6_deg`.
pub fn motor_columns() -> Vec<String> {
    (1..=LEG_COUNT).map(|i| format!("q{i}_deg")).collect()
}

pub fn record_columns(r: &SweepRecord) -> Vec<String> {
    r.motor_angles.iter().map(|q| num(q.to_degrees())).collect()
}

pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn open(&mut self, name: &str) -> Result<File, CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.written.push(name.to_string());
        Ok(f)
    }

    pub fn csv<I>(&mut self, name: &str, header: &[String], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(self.open(name)?);
        let fail = |e: csv::Error| CliError::io(format!("writing {name}"), e.into());
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        w.flush().map_err(|e| CliError::io(format!("writing {name}"), e))
    }

    pub fn json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let f = self.open(name)?;
        serde_json::to_writer_pretty(f, value).map_err(|e| CliError::io(format!("writing {name}"), e.into()))
    }

    /// `<command>_manifest.json`, listing every file written so far.
    pub fn manifest(&mut self, command: &str, cfg: &RunConfig, summary: Value) -> Result<(), CliError> {
        let name = format!("{command}_manifest.json");
        let files = self.written.clone();
        let m = json!({
            "command": command,
            "version": concat!("pcr ", env!("CARGO_PKG_VERSION")),
            "config_hash": config_hash(cfg),
            "residual_tolerance": cfg.solver.residual_tolerance,
            "integrator": {
                "rtol": cfg.solver.integrator.rtol,
                "atol": cfg.solver.integrator.atol,
            },
            "files": files,
            "summary": summary,
        });
        self.json(&name, &m)
    }
}

/// SHA-256 of the effective configuration in canonical TOML.
pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}
