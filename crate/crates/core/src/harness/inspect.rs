//! Configuration certification and impedance dumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SystemConfig;
use crate::error::{RcaError, Result};
use crate::geometry::{is_feasible, min_pair_distance, RotationAxisMatrix, SphericalCap, UnitAxis, Vec3};
use crate::optimizer::build_codebook;

/// Largest tolerated relative change of a mutual impedance when the
/// quadrature order doubles.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

/// Random stream of the certification samples.
const CERTIFY_STREAM: u64 = 3;

/// Outcome of `certify`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub num_couplers: usize,
    pub quadrature_order: usize,
    pub fixed_rotation_feasible: bool,
    /// Smallest axis-to-axis distance at the fixed rotation, in meters.
    pub fixed_min_distance: f64,
    pub fixed_convergence_gap: f64,
    /// Feasible random codebook rotations that were checked.
    pub samples: usize,
    pub worst_convergence_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Checks that the fixed rotation is feasible and that the mutual
/// impedances are converged in the quadrature order, both at the fixed
/// rotation and at `samples` random feasible codebook rotations.
pub fn certify(config: &SystemConfig, samples: usize) -> Result<Certificate> {
    config.validate()?;
    let model = config.impedance_model()?;
    let geom = config.geometry()?;
    let cap = SphericalCap::new(config.theta_max)?;
    let n = config.num_couplers;
    let fixed = RotationAxisMatrix::fixed(n);
    let fixed_ok = is_feasible(&fixed, &cap, &geom)?;
    let fixed_gap = if fixed_ok { model.convergence_gap(&fixed, &geom)? } else { f64::INFINITY };

    let codebook = build_codebook(&cap, config.optimizer.codebook_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(CERTIFY_STREAM);
    let mut worst = fixed_gap;
    let mut checked = 0;
    let mut attempts = 0;
    while checked < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let u = RotationAxisMatrix::new((0..n).map(|_| codebook.get(rng.gen_range(0..codebook.len()))).collect());
        if !is_feasible(&u, &cap, &geom)? {
            continue;
        }
        worst = worst.max(model.convergence_gap(&u, &geom)?);
        checked += 1;
    }
    Ok(Certificate {
        num_couplers: n,
        quadrature_order: model.order(),
        fixed_rotation_feasible: fixed_ok,
        fixed_min_distance: min_pair_distance(&fixed, &geom),
        fixed_convergence_gap: fixed_gap,
        samples: checked,
        worst_convergence_gap: worst,
        tolerance: CONVERGENCE_TOLERANCE,
        passed: fixed_ok && worst < CONVERGENCE_TOLERANCE,
    })
}

/// Coupler rotations given either as axis vectors (normalized on use) or as `(θ_z, θ_a)`
/// angle pairs in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSpec {
    #[serde(default)]
    pub axes: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub angles: Option<Vec<[f64; 2]>>,
}

impl RotationSpec {
    pub fn matrix(&self) -> Result<RotationAxisMatrix> {
        let columns = match (&self.axes, &self.angles) {
            (Some(axes), None) => axes
                .iter()
                .map(|a| UnitAxis::normalize(Vec3::from(*a)).ok_or_else(|| RcaError::config(format!("axis {a:?} cannot be normalized"))))
                .collect::<Result<Vec<_>>>()?,
            (None, Some(angles)) => angles.iter().map(|a| UnitAxis::from_angles(a[0], a[1])).collect::<Result<Vec<_>>>()?,
            _ => return Err(RcaError::config("rotation needs exactly one of `axes` or `angles`")),
        };
        Ok(RotationAxisMatrix::new(columns))
    }
}

/// Contents of a geometry file: system parameters and one rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    #[serde(default)]
    pub system: SystemConfig,
    pub rotation: RotationSpec,
}

impl GeometryFile {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let g: GeometryFile = toml::from_str(text).map_err(|e| RcaError::config(e.to_string()))?;
        g.system.validate()?;
        Ok(g)
    }
}

/// `Z_TX` for one rotation, with complex entries as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpedanceReport {
    pub num_couplers: usize,
    pub wavelength: f64,
    pub axes: Vec<[f64; 3]>,
    pub feasible: bool,
    pub self_impedance: [f64; 2],
    pub matrix: Vec<Vec<[f64; 2]>>,
}

pub fn impedance_report(config: &SystemConfig, u: &RotationAxisMatrix) -> Result<ImpedanceReport> {
    if u.len() != config.num_couplers {
        return Err(RcaError::config(format!(
            "rotation has {} columns but the system has {} couplers",
            u.len(),
            config.num_couplers
        )));
    }
    let model = config.impedance_model()?;
    let geom = config.geometry()?;
    let cap = SphericalCap::new(config.theta_max)?;
    let z = model.assemble(u, &geom)?;
    let m = z.matrix();
    Ok(ImpedanceReport {
        num_couplers: u.len(),
        wavelength: config.wavelength(),
        axes: u.columns().iter().map(UnitAxis::to_array).collect(),
        feasible: is_feasible(u, &cap, &geom)?,
        self_impedance: [z.self_term().re, z.self_term().im],
        matrix: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
    })
}
