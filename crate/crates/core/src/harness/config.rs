//! Simulation configuration and its defaults.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beamforming::{LoadMatrix, Scenario};
use crate::channel::ChannelRealization;
use crate::coupling::{ImpedanceModel, WireParameters, DEFAULT_ORDER, FREE_SPACE_IMPEDANCE};
use crate::error::{RcaError, Result};
use crate::geometry::{ElementGeometry, SphericalCap};
use crate::optimizer::OptimizerParams;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `10^{(dBm - 30)/10}` watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Transmit beamformer of the active-array baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayBeamformer {
    /// `w ∝ conj(h)`.
    Matched,
    /// Maximizer of `|hᵀw|² / wᴴ Re{Z} w`.
    Optimal,
}

/// Sweep grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub power_dbm: Vec<f64>,
    pub couplers: Vec<usize>,
    pub paths: Vec<usize>,
    /// Coupler count used by the path sweep.
    pub paths_couplers: usize,
    /// Cap half-angles compared by the theta_max sweep, in degrees.
    pub theta_max_deg: Vec<f64>,
    /// Coupler counts traced by the convergence sweep.
    pub convergence_couplers: Vec<usize>,
    pub beampattern_psi_deg: f64,
    pub beampattern_step_deg: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            power_dbm: (0..=6).map(|i| 5.0 * i as f64).collect(),
            couplers: (1..=6).collect(),
            paths: (1..=12).collect(),
            paths_couplers: 2,
            theta_max_deg: vec![60.0, 175.0],
            convergence_couplers: vec![3, 5],
            beampattern_psi_deg: 55.0,
            beampattern_step_deg: 1.0,
        }
    }
}

/// Settings of the flexible-position stand-in baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlexiblePositionConfig {
    /// Side of the square movement region, in wavelengths.
    pub region: f64,
    /// Grid cells per side.
    pub grid: usize,
    /// Extra center clearance beyond `2a`, in wavelengths.
    pub clearance: f64,
}

impl Default for FlexiblePositionConfig {
    fn default() -> Self {
        FlexiblePositionConfig {
            region: 0.8,
            grid: 16,
            clearance: 0.01,
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Hz.
    pub carrier_frequency: f64,
    /// Dipole length in wavelengths.
    pub dipole_length: f64,
    /// Wire radius in wavelengths.
    pub dipole_radius: f64,
    pub num_couplers: usize,
    /// Center spacing along x in meters; coupler `n` sits at `n·spacing`.
    pub coupler_spacing: f64,
    /// Coupler load `[re, im]` in ohms.
    pub load_impedance: [f64; 2],
    /// Radians.
    pub theta_max: f64,
    /// dBm.
    pub transmit_power: f64,
    /// dBm.
    pub noise_power: f64,
    /// Meters.
    pub reference_distance: f64,
    pub num_paths: usize,
    pub rng_seed: u64,
    /// Ohms.
    pub wave_impedance: f64,
    /// Gauss–Legendre nodes per panel of the mutual-impedance rule.
    pub quadrature_order: usize,
    pub active_array_beamformer: ArrayBeamformer,
    pub optimizer: OptimizerParams,
    pub sweeps: SweepConfig,
    pub flexible_position: FlexiblePositionConfig,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let f = 7e9;
        SystemConfig {
            carrier_frequency: f,
            dipole_length: 0.5,
            dipole_radius: 1.0 / 500.0,
            num_couplers: 3,
            coupler_spacing: SPEED_OF_LIGHT / f / 4.0,
            load_impedance: [0.05, 50.0],
            theta_max: PI,
            transmit_power: 30.0,
            noise_power: -90.0,
            reference_distance: 250.0,
            num_paths: 6,
            rng_seed: 0,
            wave_impedance: FREE_SPACE_IMPEDANCE,
            quadrature_order: DEFAULT_ORDER,
            active_array_beamformer: ArrayBeamformer::Matched,
            optimizer: OptimizerParams::default(),
            sweeps: SweepConfig::default(),
            flexible_position: FlexiblePositionConfig::default(),
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| RcaError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RcaError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            RcaError::Config(msg) => RcaError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let checks = [
            (positive(self.carrier_frequency), "carrier_frequency must be positive"),
            (positive(self.dipole_length), "dipole_length must be positive"),
            (
                positive(self.dipole_radius) && self.dipole_radius < self.dipole_length / 10.0,
                "dipole_radius must lie in (0, dipole_length/10)",
            ),
            (positive(self.coupler_spacing), "coupler_spacing must be positive"),
            (self.load_impedance.iter().all(|x| x.is_finite()), "load_impedance must be finite"),
            (self.theta_max > 0.0 && self.theta_max <= PI, "theta_max must lie in (0, pi]"),
            (self.transmit_power.is_finite() && self.noise_power.is_finite(), "powers must be finite"),
            (positive(self.reference_distance), "reference_distance must be positive"),
            (self.num_paths >= 1, "num_paths must be at least 1"),
            (positive(self.wave_impedance), "wave_impedance must be positive"),
            (
                (1..=crate::numerics::QuadratureRule::MAX_ORDER / 2).contains(&self.quadrature_order),
                "quadrature_order must lie in [1, 512]",
            ),
            (
                positive(self.flexible_position.region) && self.flexible_position.grid >= 1 && self.flexible_position.clearance >= 0.0,
                "flexible_position needs a positive region, at least one cell and nonnegative clearance",
            ),
            (
                self.sweeps.theta_max_deg.iter().all(|&t| t > 0.0 && t <= 180.0),
                "sweeps.theta_max_deg entries must lie in (0, 180]",
            ),
            (
                self.sweeps.paths.iter().all(|&l| l >= 1),
                "sweeps.paths entries must be at least 1",
            ),
            (
                positive(self.sweeps.beampattern_step_deg) && (0.0..=180.0).contains(&self.sweeps.beampattern_psi_deg),
                "beampattern needs a positive step and psi in [0, 180]",
            ),
        ];
        if let Some((_, msg)) = checks.iter().find(|(ok, _)| !ok) {
            return Err(RcaError::config(*msg));
        }
        self.optimizer.validate()
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn wire(&self) -> Result<WireParameters> {
        let lambda = self.wavelength();
        WireParameters::new(lambda, self.dipole_length * lambda, self.dipole_radius * lambda, self.wave_impedance)
    }

    /// Impedance model with a fresh cache, shareable across scenarios.
    pub fn impedance_model(&self) -> Result<Arc<ImpedanceModel>> {
        Ok(Arc::new(ImpedanceModel::new(self.wire()?, self.quadrature_order)?.with_cache()))
    }

    pub fn load(&self) -> Complex64 {
        Complex64::new(self.load_impedance[0], self.load_impedance[1])
    }

    pub fn geometry(&self) -> Result<ElementGeometry> {
        let lambda = self.wavelength();
        let xs: Vec<f64> = (1..=self.num_couplers).map(|n| n as f64 * self.coupler_spacing).collect();
        ElementGeometry::on_x_axis(&xs, self.dipole_length * lambda, self.dipole_radius * lambda)
    }

    /// Free-space power gain `(λ / 4π r)²` over the reference distance.
    pub fn pathloss(&self) -> f64 {
        (self.wavelength() / (4.0 * PI * self.reference_distance)).powi(2)
    }

    pub fn with_couplers(&self, n: usize) -> Self {
        SystemConfig { num_couplers: n, ..self.clone() }
    }

    pub fn with_paths(&self, l: usize) -> Self {
        SystemConfig { num_paths: l, ..self.clone() }
    }

    pub fn with_theta_max(&self, theta: f64) -> Self {
        SystemConfig { theta_max: theta, ..self.clone() }
    }

    /// Link for `channel` using a shared impedance model.
    pub fn scenario(&self, model: &Arc<ImpedanceModel>, channel: ChannelRealization) -> Result<Scenario> {
        Scenario::new(
            self.geometry()?,
            Arc::clone(model),
            LoadMatrix::uniform(self.num_couplers, self.load())?,
            channel,
            SphericalCap::new(self.theta_max)?,
            dbm_to_watts(self.transmit_power),
            dbm_to_watts(self.noise_power),
        )
    }
}
