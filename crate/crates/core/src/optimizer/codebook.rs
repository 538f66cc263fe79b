//! Spherical Fibonacci codebook over a cap.

use std::f64::consts::PI;

use crate::error::{RcaError, Result};
use crate::geometry::{SphericalCap, UnitAxis};

/// Near-uniform deterministic set of axes inside a cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    codewords: Vec<UnitAxis>,
}

impl Codebook {
    pub fn codewords(&self) -> &[UnitAxis] {
        &self.codewords
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn get(&self, i: usize) -> UnitAxis {
        self.codewords[i]
    }
}

/// Golden-ratio Fibonacci lattice of `size` points on `cap`.
///
/// Zenith angles split the cap into equal-area bands; azimuths advance by
/// `2π/φ_g` per point.
pub fn build_codebook(cap: &SphericalCap, size: usize) -> Result<Codebook> {
    if size == 0 {
        return Err(RcaError::domain("codebook size must be at least 1"));
    }
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    let span = 1.0 - cap.c_theta();
    let codewords = (1..=size)
        .map(|i| {
            let zenith = (1.0 - (i as f64 - 0.5) / size as f64 * span).clamp(-1.0, 1.0).acos();
            let azimuth = (2.0 * PI * (i - 1) as f64 / golden).rem_euclid(2.0 * PI);
            UnitAxis::from_angles_unchecked(zenith, azimuth)
        })
        .collect();
    Ok(Codebook { codewords })
}
