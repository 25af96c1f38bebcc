//! Run artifacts: NDJSON energy streams, two-column profiles and manifests.

use crate::config::{config_hash, emit_document, Document};
use crate::error::{CliError, Result};
use radelastic::energies::EnergyReport;
use radelastic::solver::{Outcome, Trajectory};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Version string recorded in manifests.
pub const CODE_VERSION: &str = concat!("radelastic-cli ", env!("CARGO_PKG_VERSION"));

/// Seconds since the Unix epoch.
pub fn wall_clock() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Grid metadata echoed in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub radius: f64,
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
}

/// Record of one run or sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub id: String,
    pub kind: String,
    /// Canonical configuration text; parses back to the configuration that was run.
    pub config: String,
    pub config_sha256: String,
    pub code_version: String,
    pub started: f64,
    pub finished: f64,
    pub outcome: Option<Outcome>,
    pub grid: Option<GridInfo>,
    /// Largest bisected amplitude whose null run stays bounded, when a bracket was given.
    pub epsilon_small: Option<f64>,
    /// Every file written for this record, relative to its directory, including the manifest.
    pub artifacts: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ENERGY_FILE: &str = "energy.ndjson";

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// One JSON object per line.
pub fn to_ndjson<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut s = String::new();
    for r in rows {
        s.push_str(&serde_json::to_string(r)?);
        s.push('\n');
    }
    Ok(s)
}

/// Parses an NDJSON energy stream.
pub fn read_energy_stream(text: &str) -> Result<Vec<EnergyReport>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}

fn snapshot_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:.6}.txt")
}

/// Writes the energy stream, requested snapshots and manifest of a trajectory into `dir`.
pub fn write_run(doc: &Document, traj: &Trajectory, dir: &Path, started: f64) -> Result<RunManifest> {
    ensure_dir(dir)?;
    let mut artifacts = Vec::new();
    write_file(dir, ENERGY_FILE, &to_ndjson(&traj.reports)?)?;
    artifacts.push(ENERGY_FILE.to_string());
    for s in &traj.snapshots {
        for (prefix, p) in [("psi", &s.psi), ("psidot", &s.psidot)] {
            let name = snapshot_name(prefix, s.t);
            write_file(dir, &name, &p.to_two_column())?;
            artifacts.push(name);
        }
    }
    artifacts.push(MANIFEST_FILE.to_string());
    let g = traj.config.grid;
    let manifest = RunManifest {
        id: doc.scenario.id.clone(),
        kind: "run".into(),
        config: emit_document(doc),
        config_sha256: config_hash(doc),
        code_version: CODE_VERSION.into(),
        started,
        finished: wall_clock(),
        outcome: Some(traj.outcome),
        grid: Some(GridInfo { radius: g.radius(), cells: g.cells(), h: g.h(), dt: traj.dt }),
        epsilon_small: None,
        artifacts,
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    write_file(dir, MANIFEST_FILE, &(serde_json::to_string_pretty(m)? + "\n"))
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Every `*.ndjson` file below `dir`, sorted by path.
pub fn ndjson_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let p = entry.map_err(io_err(&d))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "ndjson") {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}
