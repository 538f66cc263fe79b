//! Multipath geometry, steering vectors and orientation-dependent dipole
//! patterns.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::WireParameters;
use crate::error::{RcaError, Result};
use crate::geometry::{ElementGeometry, RotationAxisMatrix, UnitAxis};
use crate::numerics::gauss_legendre;

/// `1 - ξ²` below which the dipole response is replaced by its limit 0.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// One propagation path: departure angles and complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Zenith angle in `[0, π]`.
    pub psi: f64,
    /// Azimuth angle in `[-π, π]`.
    pub phi: f64,
    #[serde(with = "complex_pair")]
    pub gain: Complex64,
}

impl PathSpec {
    pub fn new(psi: f64, phi: f64, gain: Complex64) -> Result<Self> {
        path_direction(psi, phi)?;
        if !(gain.re.is_finite() && gain.im.is_finite()) {
            return Err(RcaError::domain(format!("path gain must be finite, got {gain}")));
        }
        Ok(PathSpec { psi, phi, gain })
    }

    pub fn direction(&self) -> UnitAxis {
        UnitAxis::from_angles_unchecked(self.psi, self.phi)
    }
}

/// Ordered set of `L ≥ 1` paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    paths: Vec<PathSpec>,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathSpec>) -> Result<Self> {
        if paths.is_empty() {
            return Err(RcaError::domain("a channel needs at least one path"));
        }
        Ok(ChannelRealization { paths })
    }

    /// A unit-gain probe in one direction.
    pub fn probe(psi: f64, phi: f64) -> Result<Self> {
        Self::new(vec![PathSpec::new(psi, phi, Complex64::new(1.0, 0.0))?])
    }

    pub fn paths(&self) -> &[PathSpec] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn gains(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.paths.len(), self.paths.iter().map(|p| p.gain))
    }

    /// Same directions with every gain multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let paths = self.paths.iter().map(|p| PathSpec { gain: p.gain * c, ..*p }).collect();
        ChannelRealization { paths }
    }
}

/// Pattern normalization constant `c_dip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternNormalization {
    pub c_dip: f64,
}

/// Unit departure direction for zenith `psi` and azimuth `phi`.
pub fn path_direction(psi: f64, phi: f64) -> Result<UnitAxis> {
    if !(0.0..=PI).contains(&psi) || !(-PI..=PI).contains(&phi) {
        return Err(RcaError::domain(format!(
            "path angles out of range: psi = {psi} (needs [0, π]), phi = {phi} (needs [-π, π])"
        )));
    }
    Ok(UnitAxis::from_angles_unchecked(psi, phi))
}

/// Phase of each element center for a path: `[1, e^{j k f·p_1}, ...]`.
pub fn steering_vector(path: &PathSpec, geom: &ElementGeometry, wp: &WireParameters) -> DVector<Complex64> {
    let f = path.direction();
    DVector::from_iterator(
        geom.num_elements(),
        geom.centers().iter().map(|p| Complex64::from_polar(1.0, wp.k * f.vector().dot(p))),
    )
}

/// Unnormalized far-field amplitude of a dipole with axis `u` toward `f`.
pub fn dipole_element_response(u: &UnitAxis, f: &UnitAxis, wp: &WireParameters) -> f64 {
    response_from_cosine(u.dot(f), wp)
}

fn response_from_cosine(xi: f64, wp: &WireParameters) -> f64 {
    let s2 = 1.0 - xi * xi;
    if s2 < SINGULAR_TOLERANCE {
        return 0.0;
    }
    let half = 0.5 * wp.k * wp.dipole_length;
    ((half * xi).cos() - half.cos()) / s2.sqrt()
}

/// `c_dip = [(1/2) ∫_{-1}^{1} ẽ(x)² dx]^{-1/2}`, the azimuthal reduction of
/// the full-sphere average.
pub fn pattern_normalization(wp: &WireParameters) -> PatternNormalization {
    const PANELS: usize = 16;
    let rule = gauss_legendre(48).expect("fixed order is valid");
    let mut integral = 0.0;
    for p in 0..PANELS {
        let a = -1.0 + 2.0 * p as f64 / PANELS as f64;
        let b = a + 2.0 / PANELS as f64;
        integral += rule.integrate(a, b, |x| response_from_cosine(x, wp).powi(2));
    }
    PatternNormalization {
        c_dip: (0.5 * integral).powf(-0.5),
    }
}

/// Per-element pattern vector `√(η/π)·[1, c_dip·ẽ_1, ..., c_dip·ẽ_N]` toward `f`.
fn pattern_vector<'a>(
    u: &'a RotationAxisMatrix,
    f: &UnitAxis,
    wp: &'a WireParameters,
    norm: &PatternNormalization,
) -> impl Iterator<Item = f64> + 'a {
    let scale = (wp.eta / PI).sqrt();
    let c = norm.c_dip;
    let f = *f;
    std::iter::once(scale).chain(
        u.columns()
            .iter()
            .map(move |un| scale * c * dipole_element_response(un, &f, wp)),
    )
}

/// Effective channel `g = a ⊙ e` of a single path with unit gain.
pub fn path_channel(
    u: &RotationAxisMatrix,
    path: &PathSpec,
    geom: &ElementGeometry,
    wp: &WireParameters,
    norm: &PatternNormalization,
) -> Result<DVector<Complex64>> {
    if u.len() != geom.num_couplers() {
        return Err(RcaError::domain(format!(
            "rotation matrix has {} columns but the geometry has {} couplers",
            u.len(),
            geom.num_couplers()
        )));
    }
    let a = steering_vector(path, geom, wp);
    let e = DVector::from_iterator(geom.num_elements(), pattern_vector(u, &path.direction(), wp, norm));
    Ok(a.zip_map(&e, |a, e| a * e))
}

/// `h(U) = Σ_ℓ γ_ℓ g_ℓ(U)`, accumulated in path order.
pub fn effective_channel(
    u: &RotationAxisMatrix,
    ch: &ChannelRealization,
    geom: &ElementGeometry,
    wp: &WireParameters,
    norm: &PatternNormalization,
) -> Result<DVector<Complex64>> {
    let mut h = DVector::zeros(geom.num_elements());
    for path in ch.paths() {
        h += path_channel(u, path, geom, wp, norm)? * path.gain;
    }
    Ok(h)
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
