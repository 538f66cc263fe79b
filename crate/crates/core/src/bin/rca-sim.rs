use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rca_core::harness::{certify, impedance_report, rerun, run_to_dir, seed_list, GeometryFile, Manifest, Sweep, SystemConfig};
use rca_core::{RcaError, Result};

/// Rotatable coupler antenna simulator.
#[derive(Debug, Parser)]
#[command(name = "rca-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment sweep and write CSV files plus a manifest.
    Run {
        /// TOML system configuration; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// power, N, L, theta_max, convergence or beampattern.
        #[arg(long)]
        sweep: Sweep,
        /// Number of seeds, starting at `rng_seed`.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        out: PathBuf,
        /// Record per-scheme wall time in the `wall_ms` column.
        #[arg(long)]
        timing: bool,
    },
    /// Check feasibility of the fixed rotation and quadrature convergence.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Random codebook rotations to certify besides the fixed one.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Print Z_TX for the rotation in a geometry file as JSON.
    Impedance {
        #[arg(long)]
        geometry: PathBuf,
    },
    /// Repeat a run from its manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<SystemConfig> {
    match path {
        Some(p) => SystemConfig::from_file(p),
        None => Ok(SystemConfig::default()),
    }
}

fn print_manifest(m: &Manifest, out: &std::path::Path) {
    for f in &m.outputs {
        println!("{}", out.join(f).display());
    }
    println!("{}", out.join(rca_core::harness::MANIFEST_FILE).display());
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            sweep,
            seeds,
            out,
            timing,
        } => {
            if seeds == 0 {
                return Err(RcaError::Config("--seeds must be at least 1".into()));
            }
            let config = load_config(config.as_ref())?;
            let m = run_to_dir(&config, sweep, &seed_list(config.rng_seed, seeds), &out, timing)?;
            print_manifest(&m, &out);
        }
        Command::Validate { config, samples } => {
            let cert = certify(&load_config(config.as_ref())?, samples)?;
            println!("{}", json(&cert));
            if !cert.passed {
                eprintln!("validation failed");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Impedance { geometry } => {
            let text = fs::read_to_string(&geometry).map_err(|e| RcaError::Io { path: geometry.clone(), source: e })?;
            let g = GeometryFile::from_toml_str(&text)?;
            println!("{}", json(&impedance_report(&g.system, &g.rotation.matrix()?)?));
        }
        Command::Rerun { manifest, out } => {
            let m = rerun(&manifest, &out)?;
            print_manifest(&m, &out);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
