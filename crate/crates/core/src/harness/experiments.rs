//! Sweeps over power, coupler count, path count, cap size, iterations and
//! azimuth.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{
    baseline_active_array, baseline_fixed_rotation, baseline_flexible_position, generate_channel, scheme_rca, SchemeOutcome, SCHEME_ACTIVE,
    SCHEME_FIXED, SCHEME_FLEXIBLE, SCHEME_RCA,
};
use super::config::{dbm_to_watts, SystemConfig};
use crate::beamforming::{beampattern, rate_from_snr};
use crate::coupling::ImpedanceModel;
use crate::error::{RcaError, Result};
use crate::geometry::{RotationAxisMatrix, SphericalCap};

/// Experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Power,
    #[serde(rename = "N")]
    Couplers,
    #[serde(rename = "L")]
    Paths,
    ThetaMax,
    Convergence,
    Beampattern,
}

impl Sweep {
    pub const ALL: [Sweep; 6] = [Sweep::Power, Sweep::Couplers, Sweep::Paths, Sweep::ThetaMax, Sweep::Convergence, Sweep::Beampattern];

    pub fn name(self) -> &'static str {
        match self {
            Sweep::Power => "power",
            Sweep::Couplers => "N",
            Sweep::Paths => "L",
            Sweep::ThetaMax => "theta_max",
            Sweep::Convergence => "convergence",
            Sweep::Beampattern => "beampattern",
        }
    }

    /// Stem of the CSV written for this sweep.
    pub fn file_stem(self) -> &'static str {
        match self {
            Sweep::Couplers => "couplers",
            Sweep::Paths => "paths",
            other => other.name(),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Sweep {
    type Err = RcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(Sweep::Power),
            "N" | "n" | "couplers" => Ok(Sweep::Couplers),
            "L" | "l" | "paths" => Ok(Sweep::Paths),
            "theta_max" => Ok(Sweep::ThetaMax),
            "convergence" => Ok(Sweep::Convergence),
            "beampattern" => Ok(Sweep::Beampattern),
            other => Err(RcaError::config(format!(
                "unknown sweep {other:?}; expected one of power, N, L, theta_max, convergence, beampattern"
            ))),
        }
    }
}

/// One rate measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub sweep_value: f64,
    pub scheme: String,
    pub seed: u64,
    pub rate: f64,
    pub iterations: usize,
    pub wall_ms: Option<f64>,
}

/// Objective and rate after a given number of refinement steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub iteration: usize,
    pub scheme: String,
    pub seed: u64,
    pub objective: f64,
    pub rate: f64,
}

/// Normalized array response toward one azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternRow {
    pub phi_deg: f64,
    pub scheme: String,
    pub seed: u64,
    pub gain_db: f64,
}

/// Rows produced by one sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutput {
    Rates(Vec<RateRow>),
    Convergence(Vec<ConvergenceRow>),
    Beampattern(Vec<PatternRow>),
}

/// Per-point aggregate of rate rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub sweep_value: f64,
    pub scheme: String,
    pub rates: Vec<f64>,
    pub mean_rate: f64,
    pub mean_iterations: f64,
}

/// Groups rate rows by `(sweep_value, scheme)` in first-appearance order.
pub fn summarize(rows: &[RateRow]) -> Vec<ExperimentResult> {
    let mut out: Vec<(ExperimentResult, usize)> = Vec::new();
    for r in rows {
        let pos = out
            .iter()
            .position(|(e, _)| e.sweep_value.to_bits() == r.sweep_value.to_bits() && e.scheme == r.scheme);
        let (entry, iters) = match pos {
            Some(p) => &mut out[p],
            None => {
                out.push((
                    ExperimentResult {
                        sweep_value: r.sweep_value,
                        scheme: r.scheme.clone(),
                        rates: Vec::new(),
                        mean_rate: 0.0,
                        mean_iterations: 0.0,
                    },
                    0,
                ));
                out.last_mut().expect("just pushed")
            }
        };
        entry.rates.push(r.rate);
        *iters += r.iterations;
    }
    out.into_iter()
        .map(|(mut e, iters)| {
            let n = e.rates.len() as f64;
            e.mean_rate = e.rates.iter().sum::<f64>() / n;
            e.mean_iterations = iters as f64 / n;
            e
        })
        .collect()
}

/// Seeds `base, base + 1, ...`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

#[derive(Clone)]
struct Timed<T> {
    value: T,
    ms: f64,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<Timed<T>> {
    let start = Instant::now();
    let value = f()?;
    Ok(Timed {
        value,
        ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Outcomes of every scheme on one seed.
#[derive(Clone)]
struct SeedOutcomes {
    schemes: Vec<(String, Timed<SchemeOutcome>)>,
}

fn all_schemes(config: &SystemConfig, model: &Arc<ImpedanceModel>, seed: u64) -> Result<SeedOutcomes> {
    let channel = generate_channel(config, seed)?;
    let scenario = config.scenario(model, channel.clone())?;
    let rca = timed(|| scheme_rca(&scenario, config, seed).map(|r| r.0))?;
    let fixed = timed(|| baseline_fixed_rotation(&scenario))?;
    let active = timed(|| baseline_active_array(config, model, &channel))?;
    let flexible = timed(|| baseline_flexible_position(config, model, &channel, seed))?;
    Ok(SeedOutcomes {
        schemes: vec![
            (SCHEME_RCA.to_string(), rca),
            (SCHEME_FIXED.to_string(), fixed),
            (SCHEME_ACTIVE.to_string(), active),
            (SCHEME_FLEXIBLE.to_string(), flexible),
        ],
    })
}

/// Rows ordered by sweep point, then scheme, then seed.
fn rows_in_order(points: Vec<(f64, Vec<(u64, SeedOutcomes)>)>, power_ratio: impl Fn(f64) -> Option<f64>, timing: bool) -> Vec<RateRow> {
    let mut rows = Vec::new();
    for (value, per_seed) in points {
        let Some((_, first)) = per_seed.first() else { continue };
        let names: Vec<String> = first.schemes.iter().map(|s| s.0.clone()).collect();
        for (k, name) in names.iter().enumerate() {
            for (seed, outcomes) in &per_seed {
                let t = &outcomes.schemes[k].1;
                rows.push(RateRow {
                    sweep_value: value,
                    scheme: name.clone(),
                    seed: *seed,
                    rate: power_ratio(value).map_or(t.value.rate, |r| t.value.rate_at(r)),
                    iterations: t.value.iterations,
                    wall_ms: timing.then_some(t.ms),
                });
            }
        }
    }
    rows
}

fn per_seed<T: Send>(seeds: &[u64], f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<(u64, T)>> {
    seeds.par_iter().map(|&s| f(s).map(|v| (s, v))).collect()
}

/// Runs every scheme of `sweep` for each seed. `timing` fills `wall_ms`.
pub fn run_experiment(config: &SystemConfig, sweep: Sweep, seeds: &[u64], timing: bool) -> Result<SweepOutput> {
    config.validate()?;
    let model = config.impedance_model()?;
    let sw = &config.sweeps;
    match sweep {
        Sweep::Power => {
            // Ω does not depend on P, so each seed is optimized once.
            let outcomes = per_seed(seeds, |s| all_schemes(config, &model, s))?;
            let noise = dbm_to_watts(config.noise_power);
            let points = sw.power_dbm.iter().map(|&p| (p, outcomes.clone())).collect();
            Ok(SweepOutput::Rates(rows_in_order(points, |p| Some(dbm_to_watts(p) / noise), timing)))
        }
        Sweep::Couplers => {
            let mut points = Vec::new();
            for &n in &sw.couplers {
                let cfg = config.with_couplers(n);
                points.push((n as f64, per_seed(seeds, |s| all_schemes(&cfg, &model, s))?));
            }
            Ok(SweepOutput::Rates(rows_in_order(points, |_| None, timing)))
        }
        Sweep::Paths => {
            let mut points = Vec::new();
            for &l in &sw.paths {
                let cfg = config.with_couplers(sw.paths_couplers).with_paths(l);
                points.push((l as f64, per_seed(seeds, |s| all_schemes(&cfg, &model, s))?));
            }
            Ok(SweepOutput::Rates(rows_in_order(points, |_| None, timing)))
        }
        Sweep::ThetaMax => {
            let mut points = Vec::new();
            for &n in &sw.couplers {
                let cfg = config.with_couplers(n);
                let outcomes = per_seed(seeds, |s| {
                    let channel = generate_channel(&cfg, s)?;
                    let base = cfg.scenario(&model, channel)?;
                    let mut schemes = Vec::new();
                    for &deg in &sw.theta_max_deg {
                        let c = cfg.with_theta_max(deg.to_radians());
                        let scenario = base.with_cap(SphericalCap::new(c.theta_max)?);
                        schemes.push((format!("{SCHEME_RCA} (theta_max={deg}deg)"), timed(|| scheme_rca(&scenario, &c, s).map(|r| r.0))?));
                    }
                    schemes.push((SCHEME_FIXED.to_string(), timed(|| baseline_fixed_rotation(&base))?));
                    Ok(SeedOutcomes { schemes })
                })?;
                points.push((n as f64, outcomes));
            }
            Ok(SweepOutput::Rates(rows_in_order(points, |_| None, timing)))
        }
        Sweep::Convergence => {
            let mut rows = Vec::new();
            for &n in &sw.convergence_couplers {
                let cfg = config.with_couplers(n);
                let scheme = format!("{SCHEME_RCA} (N={n})");
                let traces = per_seed(seeds, |s| {
                    let scenario = cfg.scenario(&model, generate_channel(&cfg, s)?)?;
                    let (_, result) = scheme_rca(&scenario, &cfg, s)?;
                    Ok((scenario.power_ratio(), result.trace.objectives()))
                })?;
                for (seed, (ratio, objectives)) in traces {
                    rows.extend(objectives.iter().enumerate().map(|(t, &phi)| ConvergenceRow {
                        iteration: t,
                        scheme: scheme.clone(),
                        seed,
                        objective: phi,
                        rate: rate_from_snr(ratio * phi.exp()),
                    }));
                }
            }
            Ok(SweepOutput::Convergence(rows))
        }
        Sweep::Beampattern => {
            let psi = sw.beampattern_psi_deg.to_radians();
            let steps = (360.0 / sw.beampattern_step_deg).floor() as usize;
            let grid_deg: Vec<f64> = (0..=steps).map(|i| -180.0 + i as f64 * sw.beampattern_step_deg).filter(|d| *d <= 180.0).collect();
            let grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians().clamp(-std::f64::consts::PI, std::f64::consts::PI)).collect();
            let patterns = per_seed(seeds, |s| {
                let scenario = config.scenario(&model, generate_channel(config, s)?)?;
                let (_, result) = scheme_rca(&scenario, config, s)?;
                let rca = beampattern(result.final_u(), &scenario, psi, &grid)?;
                let fixed = beampattern(&RotationAxisMatrix::fixed(config.num_couplers), &scenario, psi, &grid)?;
                Ok([(SCHEME_RCA, rca), (SCHEME_FIXED, fixed)])
            })?;
            let mut rows = Vec::new();
            for k in 0..2 {
                for (seed, schemes) in &patterns {
                    let (name, values) = &schemes[k];
                    rows.extend(grid_deg.iter().zip(values).map(|(&d, &g)| PatternRow {
                        phi_deg: d,
                        scheme: name.to_string(),
                        seed: *seed,
                        gain_db: g,
                    }));
                }
            }
            Ok(SweepOutput::Beampattern(rows))
        }
    }
}
