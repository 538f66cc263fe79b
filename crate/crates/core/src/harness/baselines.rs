//! Seeded channels and the comparison schemes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{dbm_to_watts, ArrayBeamformer, SystemConfig};
use crate::beamforming::{objective_from_gain, rate_from_snr, solve_beamforming, transmit_power_quadratic, LoadMatrix, Scenario};
use crate::channel::{steering_vector, ChannelRealization, PathSpec};
use crate::coupling::{ImpedanceMatrix, ImpedanceModel};
use crate::error::{RcaError, Result};
use crate::geometry::{ElementGeometry, RotationAxisMatrix, Vec3};
use crate::optimizer::{cem_search, optimize, OptimizationResult};

/// Random stream of the channel draws.
const CHANNEL_STREAM: u64 = 1;
/// Random stream of the flexible-position search.
const FLEXIBLE_STREAM: u64 = 2;

pub const SCHEME_RCA: &str = "rca";
pub const SCHEME_FIXED: &str = "fixed-rotation";
pub const SCHEME_ACTIVE: &str = "active-array";
pub const SCHEME_FLEXIBLE: &str = "flexible-position (stand-in)";

/// Draws `L` paths: directions uniform on the sphere, gains `CN(0, β/L)`.
pub fn generate_channel(config: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CHANNEL_STREAM);
    let l = config.num_paths;
    let sigma = (config.pathloss() / (2.0 * l as f64)).sqrt();
    let paths = (0..l)
        .map(|_| {
            let psi = (1.0 - 2.0 * rng.gen::<f64>()).clamp(-1.0, 1.0).acos();
            let phi = -PI + 2.0 * PI * rng.gen::<f64>();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            PathSpec::new(psi, phi, Complex64::new(sigma * re, sigma * im))
        })
        .collect::<Result<Vec<_>>>()?;
    ChannelRealization::new(paths)
}

/// Rate and bookkeeping of one scheme on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    /// Power-independent gain `Ω` (SNR per unit `P/σ²`).
    pub gain: f64,
    pub rate: f64,
    pub iterations: usize,
}

impl SchemeOutcome {
    fn new(gain: f64, power_ratio: f64, iterations: usize) -> Self {
        SchemeOutcome {
            gain,
            rate: rate_from_snr(power_ratio * gain),
            iterations,
        }
    }

    /// Rate at a different `P/σ²`.
    pub fn rate_at(&self, power_ratio: f64) -> f64 {
        rate_from_snr(power_ratio * self.gain)
    }
}

fn power_ratio(config: &SystemConfig) -> f64 {
    dbm_to_watts(config.transmit_power) / dbm_to_watts(config.noise_power)
}

/// All couplers parallel to `u₀`.
pub fn baseline_fixed_rotation(scenario: &Scenario) -> Result<SchemeOutcome> {
    let u = RotationAxisMatrix::fixed(scenario.num_couplers());
    if !scenario.is_feasible(&u)? {
        return Err(RcaError::config("the fixed-rotation layout violates the spacing constraint"));
    }
    let e = scenario.evaluate(&u)?;
    Ok(SchemeOutcome::new(e.beamforming.effective_gain, scenario.power_ratio(), 0))
}

/// Optimized rotatable couplers.
pub fn scheme_rca(scenario: &Scenario, config: &SystemConfig, seed: u64) -> Result<(SchemeOutcome, OptimizationResult)> {
    let result = optimize(scenario, &config.optimizer, seed)?;
    let e = scenario.evaluate(result.final_u())?;
    Ok((SchemeOutcome::new(e.beamforming.effective_gain, scenario.power_ratio(), result.trace.iterations()), result))
}

/// Received amplitude vector of `z`-parallel omnidirectional elements at
/// `centers`: `h_m = √(η/π) Σ_ℓ γ_ℓ e^{j k f_ℓ·p_m}`.
fn omni_channel(geom: &ElementGeometry, channel: &ChannelRealization, model: &ImpedanceModel) -> DVector<Complex64> {
    let wire = model.wire();
    let scale = (wire.eta / PI).sqrt();
    let mut h = DVector::zeros(geom.num_elements());
    for p in channel.paths() {
        h += steering_vector(p, geom, wire) * (p.gain * scale);
    }
    h
}

/// Best ratio `|hᵀw|² / wᴴ R w` for the chosen beamformer.
pub fn array_gain(h: &DVector<Complex64>, resistance: &DMatrix<f64>, beamformer: ArrayBeamformer) -> Result<f64> {
    let v = h.map(|c| c.conj());
    let r = resistance.map(|x| Complex64::new(x, 0.0));
    let w = match beamformer {
        ArrayBeamformer::Matched => v.clone(),
        ArrayBeamformer::Optimal => r
            .clone()
            .lu()
            .solve(&v)
            .ok_or_else(|| RcaError::ModelViolation("array resistance matrix is singular".into()))?,
    };
    let power = (w.adjoint() * &r * &w)[(0, 0)].re;
    if !(power > 0.0) {
        return Err(RcaError::ModelViolation(format!("array radiated power {power:.6e} is not positive")));
    }
    Ok(h.dot(&w).norm_sqr() / power)
}

/// `N + 1` active `z`-dipoles at half-wavelength spacing.
pub fn baseline_active_array(config: &SystemConfig, model: &Arc<ImpedanceModel>, channel: &ChannelRealization) -> Result<SchemeOutcome> {
    let lambda = config.wavelength();
    let n = config.num_couplers;
    let xs: Vec<f64> = (1..=n).map(|m| m as f64 * lambda / 2.0).collect();
    let wire = model.wire();
    let geom = ElementGeometry::on_x_axis(&xs, wire.dipole_length, wire.dipole_radius)?;
    let z = model.assemble(&RotationAxisMatrix::fixed(n), &geom)?;
    let h = omni_channel(&geom, channel, model);
    let gain = array_gain(&h, &z.real_part(), config.active_array_beamformer)?;
    Ok(SchemeOutcome::new(gain, power_ratio(config), 0))
}

/// Cell centers of the square movement region, row-major.
fn position_grid(config: &SystemConfig) -> Vec<Vec3> {
    let fp = config.flexible_position;
    let lambda = config.wavelength();
    let side = fp.region * lambda;
    let cell = side / fp.grid as f64;
    let coord = |i: usize| -0.5 * side + (i as f64 + 0.5) * cell;
    (0..fp.grid)
        .flat_map(|iy| (0..fp.grid).map(move |ix| Vec3::new(coord(ix), coord(iy), 0.0)))
        .collect()
}

/// Cells nearest `(n · region / 2N, 0)` for `n = 1..N`.
fn default_cells(grid: &[Vec3], config: &SystemConfig) -> Vec<usize> {
    let n = config.num_couplers;
    let half = 0.5 * config.flexible_position.region * config.wavelength();
    (1..=n)
        .map(|m| {
            let target = Vec3::new(m as f64 * half / n as f64, 0.0, 0.0);
            (0..grid.len())
                .min_by(|&a, &b| (grid[a] - target).norm().total_cmp(&(grid[b] - target).norm()))
                .expect("grid is nonempty")
        })
        .collect()
}

/// Induced-current gain of `z`-parallel omnidirectional couplers at the
/// chosen cells, or `None` when two elements are closer than the clearance.
fn flexible_gain(
    cells: &[usize],
    grid: &[Vec3],
    config: &SystemConfig,
    model: &ImpedanceModel,
    channel: &ChannelRealization,
    loads: &LoadMatrix,
) -> Result<Option<f64>> {
    let wire = model.wire();
    let min_spacing = 2.0 * wire.dipole_radius + config.flexible_position.clearance * config.wavelength();
    let centers: Vec<Vec3> = cells.iter().map(|&c| grid[c]).collect();
    let all = std::iter::once(Vec3::zeros()).chain(centers.iter().copied()).collect::<Vec<_>>();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if (all[i] - all[j]).norm() < min_spacing {
                return Ok(None);
            }
        }
    }
    let geom = ElementGeometry::with_centers(centers, wire.dipole_length, wire.dipole_radius)?;
    let z: ImpedanceMatrix = model.assemble(&RotationAxisMatrix::fixed(cells.len()), &geom)?;
    let (_, w_e) = solve_beamforming(&z, loads)?;
    let power = transmit_power_quadratic(&z, &w_e)?;
    let h = omni_channel(&geom, channel, model);
    Ok(Some(h.dot(&w_e).norm_sqr() / power))
}

/// Couplers parallel to `z` at positions chosen on a grid over the movement
/// region: exhaustive enumeration when the grid product fits the sampling
/// budget, cross-entropy search otherwise. The default layout is always part
/// of the candidate set.
pub fn baseline_flexible_position(
    config: &SystemConfig,
    model: &Arc<ImpedanceModel>,
    channel: &ChannelRealization,
    seed: u64,
) -> Result<SchemeOutcome> {
    let n = config.num_couplers;
    let loads = LoadMatrix::uniform(n, config.load())?;
    let grid = position_grid(config);
    let eval = |cells: &[usize]| flexible_gain(cells, &grid, config, model, channel, &loads);
    let default = default_cells(&grid, config);
    let mut best = eval(&default)?.unwrap_or(0.0);
    if n == 0 {
        return Ok(SchemeOutcome::new(best, power_ratio(config), 0));
    }
    let opt = &config.optimizer;
    let budget = opt.cem_samples.saturating_mul(opt.cem_iterations);
    let exhaustive = (grid.len() as u128).checked_pow(n as u32).is_some_and(|c| c <= budget as u128);
    let iterations = if exhaustive {
        let total = grid.len().pow(n as u32);
        for k in 0..total {
            let cells: Vec<usize> = (0..n).map(|d| k / grid.len().pow(d as u32) % grid.len()).collect();
            if let Some(g) = eval(&cells)? {
                if g > best {
                    best = g;
                }
            }
        }
        0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(FLEXIBLE_STREAM);
        let state = cem_search(n, grid.len(), &opt.cem_schedule(), &mut rng, |cells| Ok(eval(cells)?.map(objective_from_gain)))?;
        if let Some(s) = state.best() {
            best = best.max(s.objective.exp());
        }
        opt.cem_iterations
    };
    Ok(SchemeOutcome::new(best, power_ratio(config), iterations))
}
