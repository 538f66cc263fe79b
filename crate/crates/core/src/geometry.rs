//! Axis parameterization, the spherical-cap rotation set and the
//! non-intersection machinery for thin-wire elements.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{RcaError, Result};

pub type Vec3 = Vector3<f64>;

/// Tolerance on `‖u‖ = 1` accepted by [`UnitAxis::new`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Slack on the cap inequality absorbing retraction round-off.
pub const CAP_TOLERANCE: f64 = 1e-12;

/// Below this value of `1 - (uᵢ·uⱼ)²` two segments are treated as parallel.
const PARALLEL_EPS: f64 = 1e-12;

/// A direction in 3D space with unit Euclidean norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct UnitAxis(Vec3);

impl UnitAxis {
    /// Reference axis of the active antenna, `+z`.
    pub fn reference() -> Self {
        UnitAxis(Vec3::new(0.0, 0.0, 1.0))
    }

    pub fn x() -> Self {
        UnitAxis(Vec3::new(1.0, 0.0, 0.0))
    }

    pub fn y() -> Self {
        UnitAxis(Vec3::new(0.0, 1.0, 0.0))
    }

    /// Accepts `(x, y, z)` only if its norm is 1 within [`UNIT_TOLERANCE`].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Vec3::new(x, y, z);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(RcaError::domain(format!(
                "axis ({x}, {y}, {z}) has norm {norm}, expected 1"
            )));
        }
        Ok(UnitAxis(v))
    }

    /// Normalizes a nonzero finite vector.
    pub fn normalize(v: Vec3) -> Option<Self> {
        let norm = v.norm();
        (norm > 0.0 && norm.is_finite()).then(|| UnitAxis(v / norm))
    }

    /// Axis with zenith `theta_z ∈ [0, π]` and azimuth `theta_a ∈ [-π, π)`.
    pub fn from_angles(theta_z: f64, theta_a: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta_z) || !(-PI..PI).contains(&theta_a) {
            return Err(RcaError::domain(format!(
                "axis angles out of range: zenith {theta_z}, azimuth {theta_a}"
            )));
        }
        Ok(Self::from_angles_unchecked(theta_z, theta_a))
    }

    pub(crate) fn from_angles_unchecked(theta_z: f64, theta_a: f64) -> Self {
        let (sz, cz) = theta_z.sin_cos();
        let (sa, ca) = theta_a.sin_cos();
        UnitAxis(Vec3::new(sz * ca, sz * sa, cz))
    }

    /// Inverse of [`UnitAxis::from_angles`]; the azimuth at the poles is 0.
    pub fn angles(&self) -> (f64, f64) {
        let rho = self.0.x.hypot(self.0.y);
        let theta_z = rho.atan2(self.0.z);
        let mut theta_a = if rho == 0.0 { 0.0 } else { self.0.y.atan2(self.0.x) };
        if theta_a >= PI {
            theta_a -= 2.0 * PI;
        }
        (theta_z, theta_a)
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }

    pub fn dot(&self, other: &UnitAxis) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }
}

impl TryFrom<[f64; 3]> for UnitAxis {
    type Error = RcaError;

    fn try_from(v: [f64; 3]) -> Result<Self> {
        UnitAxis::new(v[0], v[1], v[2])
    }
}

impl From<UnitAxis> for [f64; 3] {
    fn from(u: UnitAxis) -> Self {
        u.to_array()
    }
}

/// Rotation axes of the `N` couplers, one column per coupler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RotationAxisMatrix(Vec<UnitAxis>);

impl RotationAxisMatrix {
    pub fn new(columns: Vec<UnitAxis>) -> Self {
        RotationAxisMatrix(columns)
    }

    /// All couplers parallel to the reference axis.
    pub fn fixed(n: usize) -> Self {
        RotationAxisMatrix(vec![UnitAxis::reference(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn columns(&self) -> &[UnitAxis] {
        &self.0
    }

    /// Column `n` (zero based over the couplers).
    pub fn column(&self, n: usize) -> UnitAxis {
        self.0[n]
    }

    pub fn with_column(&self, n: usize, u: UnitAxis) -> Self {
        let mut cols = self.0.clone();
        cols[n] = u;
        RotationAxisMatrix(cols)
    }
}

/// Set of unit vectors within `theta_max` of a reference axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCap {
    axis: UnitAxis,
    perpendicular: UnitAxis,
    theta_max: f64,
    c_theta: f64,
    s_theta: f64,
}

impl SphericalCap {
    /// Cap around `+z` with half-angle `theta_max ∈ (0, π]`.
    pub fn new(theta_max: f64) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= PI) {
            return Err(RcaError::domain(format!(
                "theta_max must lie in (0, pi], got {theta_max}"
            )));
        }
        let (s_theta, c_theta) = theta_max.sin_cos();
        Ok(SphericalCap {
            axis: UnitAxis::reference(),
            perpendicular: UnitAxis::x(),
            theta_max,
            c_theta,
            s_theta,
        })
    }

    pub fn axis(&self) -> UnitAxis {
        self.axis
    }

    /// Fixed unit vector orthogonal to the axis used by the degenerate cases.
    pub fn perpendicular(&self) -> UnitAxis {
        self.perpendicular
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn c_theta(&self) -> f64 {
        self.c_theta
    }

    pub fn s_theta(&self) -> f64 {
        self.s_theta
    }

    pub fn contains(&self, u: &UnitAxis) -> bool {
        self.axis.dot(u) >= self.c_theta - CAP_TOLERANCE
    }

    /// Membership for a raw vector: unit norm and the cap inequality.
    pub fn contains_vector(&self, x: &Vec3) -> bool {
        (x.norm() - 1.0).abs() <= UNIT_TOLERANCE
            && self.axis.vector().dot(x) >= self.c_theta - CAP_TOLERANCE
    }

    /// Point of the boundary circle whose component orthogonal to the axis
    /// is aligned with `v`; falls back to the fixed perpendicular when `v`
    /// has no orthogonal component.
    pub(crate) fn boundary_toward(&self, v: &Vec3) -> UnitAxis {
        let u0 = self.axis.vector();
        let perp = v - u0 * u0.dot(v);
        let dir = UnitAxis::normalize(perp).unwrap_or(self.perpendicular);
        UnitAxis(u0 * self.c_theta + dir.vector() * self.s_theta)
    }

    /// Total map from `ℝ³` onto the cap, identity on normalized members.
    pub fn retract(&self, y: &Vec3) -> UnitAxis {
        let Some(ybar) = UnitAxis::normalize(*y) else {
            return self.axis;
        };
        if ybar.dot(&self.axis) >= self.c_theta {
            ybar
        } else {
            self.boundary_toward(y)
        }
    }
}

/// Orthonormal basis `(b₁, b₂)` of the tangent plane at `u`.
///
/// Starts from the canonical axis least aligned with `u` (first one on
/// ties), so `u = +z` yields `(+x, +y)`.
pub fn tangent_basis(u: &UnitAxis) -> (UnitAxis, UnitAxis) {
    let v = u.vector();
    let a = [v.x.abs(), v.y.abs(), v.z.abs()];
    let mut k = 0;
    for i in 1..3 {
        if a[i] < a[k] {
            k = i;
        }
    }
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    let b1 = v.cross(&e).cross(v).normalize();
    let b2 = v.cross(&b1).normalize();
    (UnitAxis(b1), UnitAxis(b2))
}

/// Centers and wire dimensions of the active antenna and the couplers.
///
/// Index 0 is the active antenna at the origin with axis `+z`; index
/// `n ≥ 1` is coupler `n`, whose axis is column `n - 1` of the rotation
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGeometry {
    centers: Vec<Vec3>,
    dipole_length: f64,
    dipole_radius: f64,
}

impl ElementGeometry {
    /// Couplers centered on the x axis at the given abscissae.
    pub fn on_x_axis(coupler_x: &[f64], dipole_length: f64, dipole_radius: f64) -> Result<Self> {
        let centers = coupler_x.iter().map(|&x| Vec3::new(x, 0.0, 0.0)).collect();
        Self::with_centers(centers, dipole_length, dipole_radius)
    }

    /// Couplers at arbitrary centers. Used by the baseline layouts, which do
    /// not keep the couplers on the x axis.
    pub fn with_centers(coupler_centers: Vec<Vec3>, dipole_length: f64, dipole_radius: f64) -> Result<Self> {
        if !(dipole_length > 0.0 && dipole_radius > 0.0 && dipole_radius < dipole_length) {
            return Err(RcaError::domain(format!(
                "invalid wire dimensions D = {dipole_length}, a = {dipole_radius}"
            )));
        }
        if coupler_centers.iter().any(|c| !c.iter().all(|v| v.is_finite())) {
            return Err(RcaError::domain("coupler center is not finite"));
        }
        let mut centers = Vec::with_capacity(coupler_centers.len() + 1);
        centers.push(Vec3::zeros());
        centers.extend(coupler_centers);
        Ok(ElementGeometry {
            centers,
            dipole_length,
            dipole_radius,
        })
    }

    pub fn num_couplers(&self) -> usize {
        self.centers.len() - 1
    }

    pub fn num_elements(&self) -> usize {
        self.centers.len()
    }

    pub fn center(&self, i: usize) -> &Vec3 {
        &self.centers[i]
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    pub fn dipole_length(&self) -> f64 {
        self.dipole_length
    }

    pub fn dipole_radius(&self) -> f64 {
        self.dipole_radius
    }

    pub fn half_length(&self) -> f64 {
        0.5 * self.dipole_length
    }

    /// Axis of element `i` under rotation matrix `u`.
    pub fn axis(&self, i: usize, u: &RotationAxisMatrix) -> UnitAxis {
        if i == 0 {
            UnitAxis::reference()
        } else {
            u.column(i - 1)
        }
    }

    pub(crate) fn check_dimensions(&self, u: &RotationAxisMatrix) -> Result<()> {
        if u.len() != self.num_couplers() {
            return Err(RcaError::domain(format!(
                "rotation matrix has {} columns but the geometry has {} couplers",
                u.len(),
                self.num_couplers()
            )));
        }
        Ok(())
    }
}

/// Closest approach of two equal-length segments `pᵢ + s uᵢ`, `pⱼ + t uⱼ`
/// with `s, t ∈ [-h, h]`. Returns `(distance, s, t)`.
pub fn segment_closest_points(
    pi: &Vec3,
    ui: &UnitAxis,
    pj: &Vec3,
    uj: &UnitAxis,
    h: f64,
) -> (f64, f64, f64) {
    let r = pi - pj;
    let b = ui.dot(uj);
    let c = ui.vector().dot(&r);
    let f = uj.vector().dot(&r);
    let denom = 1.0 - b * b;
    let mut s = if denom.abs() < PARALLEL_EPS {
        0.0
    } else {
        ((b * f - c) / denom).clamp(-h, h)
    };
    let mut t = f + s * b;
    if t < -h || t > h {
        t = t.clamp(-h, h);
        s = (t * b - c).clamp(-h, h);
    }
    let d = r + ui.vector() * s - uj.vector() * t;
    (d.norm(), s, t)
}

/// Minimum distance between the axis segments of elements `i` and `j`.
pub fn segment_min_distance(i: usize, j: usize, u: &RotationAxisMatrix, geom: &ElementGeometry) -> Result<f64> {
    if i == j {
        return Err(RcaError::domain(format!("segment distance of element {i} with itself")));
    }
    geom.check_dimensions(u)?;
    let n = geom.num_elements();
    if i >= n || j >= n {
        return Err(RcaError::domain(format!("element index out of range ({i}, {j}) for {n} elements")));
    }
    Ok(segment_closest_points(
        geom.center(i),
        &geom.axis(i, u),
        geom.center(j),
        &geom.axis(j, u),
        geom.half_length(),
    )
    .0)
}

/// Smallest pairwise axis-segment distance over all elements.
pub fn min_pair_distance(u: &RotationAxisMatrix, geom: &ElementGeometry) -> f64 {
    let n = geom.num_elements();
    let h = geom.half_length();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let ui = geom.axis(i, u);
        for j in i + 1..n {
            let d = segment_closest_points(geom.center(i), &ui, geom.center(j), &geom.axis(j, u), h).0;
            best = best.min(d);
        }
    }
    best
}

/// Whether every column lies in the cap and no two elements come closer
/// than one wire diameter.
pub fn is_feasible(u: &RotationAxisMatrix, cap: &SphericalCap, geom: &ElementGeometry) -> Result<bool> {
    geom.check_dimensions(u)?;
    if !u.columns().iter().all(|c| cap.contains(c)) {
        return Ok(false);
    }
    Ok(min_pair_distance(u, geom) >= 2.0 * geom.dipole_radius())
}
