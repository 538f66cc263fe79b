//! CSV tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SystemConfig;
use super::experiments::{run_experiment, summarize, RateRow, Sweep, SweepOutput};
use crate::error::{RcaError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_NAME: &str = "rca-sim";

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub sweep: Sweep,
    pub seeds: Vec<u64>,
    pub timing: bool,
    pub config: SystemConfig,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| RcaError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| RcaError::config(format!("{}: {e}", path.display())))
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders the rows of one sweep as CSV text.
pub fn render_csv(output: &SweepOutput) -> String {
    let mut s = String::new();
    match output {
        SweepOutput::Rates(rows) => {
            s.push_str("sweep_value,scheme,seed,rate_bps_hz,iterations,wall_ms\n");
            for r in rows {
                let wall = r.wall_ms.map(float).unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{},{}", float(r.sweep_value), r.scheme, r.seed, float(r.rate), r.iterations, wall);
            }
        }
        SweepOutput::Convergence(rows) => {
            s.push_str("iteration,scheme,seed,objective,rate\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{},{}", r.iteration, r.scheme, r.seed, float(r.objective), float(r.rate));
            }
        }
        SweepOutput::Beampattern(rows) => {
            s.push_str("phi_deg,scheme,seed,gain_db\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", float(r.phi_deg), r.scheme, r.seed, float(r.gain_db));
            }
        }
    }
    s
}

pub fn write_csv(path: &Path, output: &SweepOutput) -> Result<()> {
    fs::write(path, render_csv(output)).map_err(|e| RcaError::io(path, e))
}

/// One row per sweep point and scheme with the seed-averaged rate.
pub fn render_mean_csv(rows: &[RateRow]) -> String {
    let mut s = String::from("sweep_value,scheme,seeds,mean_rate_bps_hz,mean_iterations\n");
    for e in summarize(rows) {
        let _ = writeln!(s, "{},{},{},{},{}", float(e.sweep_value), e.scheme, e.rates.len(), float(e.mean_rate), float(e.mean_iterations));
    }
    s
}

/// Runs `sweep`, writes its CSV and `manifest.json` into `out`.
pub fn run_to_dir(config: &SystemConfig, sweep: Sweep, seeds: &[u64], out: &Path, timing: bool) -> Result<Manifest> {
    if seeds.is_empty() {
        return Err(RcaError::config("at least one seed is required"));
    }
    let output = run_experiment(config, sweep, seeds, timing)?;
    fs::create_dir_all(out).map_err(|e| RcaError::io(out, e))?;
    let csv_name = format!("{}.csv", sweep.file_stem());
    write_csv(&out.join(&csv_name), &output)?;
    let mut outputs = vec![csv_name];
    if let SweepOutput::Rates(rows) = &output {
        let mean_name = format!("{}_mean.csv", sweep.file_stem());
        let path = out.join(&mean_name);
        fs::write(&path, render_mean_csv(rows)).map_err(|e| RcaError::io(&path, e))?;
        outputs.push(mean_name);
    }
    let manifest = Manifest {
        tool: TOOL_NAME.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        sweep,
        seeds: seeds.to_vec(),
        timing,
        config: config.clone(),
        outputs,
    };
    let path: PathBuf = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| RcaError::io(&path, e))?;
    Ok(manifest)
}

/// Repeats the run recorded in a manifest, writing into `out`.
pub fn rerun(manifest_path: &Path, out: &Path) -> Result<Manifest> {
    let m = Manifest::from_file(manifest_path)?;
    if m.tool != TOOL_NAME {
        return Err(RcaError::config(format!("manifest was written by {:?}, not {TOOL_NAME}", m.tool)));
    }
    run_to_dir(&m.config, m.sweep, &m.seeds, out, m.timing)
}
