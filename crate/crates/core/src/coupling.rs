//! Self and mutual impedances of thin-wire dipoles and assembly of the
//! transmit impedance matrix.
//!
//! Mutual impedances use the induced-EMF double integral for skew wires
//! with sinusoidal current distributions. The integrand has a kink on the
//! lines `s = 0` and `t = 0` (the `|s|` in the current) and a near-singular
//! `1/R` peak when two wires pass close to each other, so the square is
//! split at the feed points and, for close pairs, at the point of closest
//! approach with geometrically graded panels toward it. Each panel uses a
//! tensor Gauss–Legendre rule.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{RcaError, Result};
use crate::geometry::{segment_closest_points, ElementGeometry, RotationAxisMatrix, UnitAxis, Vec3};
use crate::numerics::{cosine_integral, gauss_legendre, sine_integral, QuadratureRule, EULER_GAMMA};

/// Free-space wave impedance in ohms.
pub const FREE_SPACE_IMPEDANCE: f64 = 376.7303;

/// Default Gauss–Legendre order per panel and dimension.
pub const DEFAULT_ORDER: usize = 16;

/// A panel end is graded when the kernel peak lies within this fraction of
/// the panel length from it.
const GRADE_THRESHOLD: f64 = 0.25;

/// Ratio between consecutive graded panel lengths.
const GRADE_RATIO: f64 = 0.25;

/// Cap on graded layers per panel end.
const MAX_LAYERS: i32 = 14;

/// Wire and medium constants shared by all elements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WireParameters {
    /// Wavenumber in rad/m.
    pub k: f64,
    pub dipole_length: f64,
    pub dipole_radius: f64,
    /// Wave impedance of the medium in ohms.
    pub eta: f64,
}

impl WireParameters {
    pub fn new(wavelength: f64, dipole_length: f64, dipole_radius: f64, eta: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(RcaError::domain(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(dipole_length > 0.0 && dipole_radius > 0.0 && dipole_radius < dipole_length / 10.0) {
            return Err(RcaError::domain(format!(
                "thin-wire model needs 0 < a < D/10, got D = {dipole_length}, a = {dipole_radius}"
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(RcaError::domain(format!("wave impedance must be positive, got {eta}")));
        }
        Ok(WireParameters {
            k: 2.0 * PI / wavelength,
            dipole_length,
            dipole_radius,
            eta,
        })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    fn half_length(&self) -> f64 {
        0.5 * self.dipole_length
    }

    fn feed_sine(&self) -> Result<f64> {
        let s = (0.5 * self.k * self.dipole_length).sin();
        if s.abs() < 1e-9 {
            return Err(RcaError::domain(format!(
                "sin(kD/2) = {s:.3e}: the sinusoidal current model is undefined for D = {} m",
                self.dipole_length
            )));
        }
        Ok(s)
    }
}

/// Self-impedance of a center-fed thin-wire dipole (closed form in Si/Ci).
pub fn self_impedance(wp: &WireParameters) -> Result<Complex64> {
    wp.feed_sine()?;
    let kd = wp.k * wp.dipole_length;
    let (s, c) = kd.sin_cos();
    let si1 = sine_integral(kd)?;
    let si2 = sine_integral(2.0 * kd)?;
    let ci1 = cosine_integral(kd)?;
    let ci2 = cosine_integral(2.0 * kd)?;
    let ci_a = cosine_integral(2.0 * wp.k * wp.dipole_radius * wp.dipole_radius / wp.dipole_length)?;

    let re = wp.eta / (2.0 * PI)
        * (EULER_GAMMA + kd.ln() - ci1
            + 0.5 * s * (si2 - 2.0 * si1)
            + 0.5 * c * (EULER_GAMMA + (0.5 * kd).ln() + ci2 - 2.0 * ci1));
    let im = wp.eta / (4.0 * PI) * (2.0 * si1 + c * (2.0 * si1 - si2) - s * (2.0 * ci1 - ci2 - ci_a));
    Ok(Complex64::new(re, im))
}

/// Normalized current `I(s)` and its derivative `I'(s)` at axial offset `s`.
/// `I'(0)` is reported as 0.
pub fn current_profile(s: f64, wp: &WireParameters) -> Result<(f64, f64)> {
    let h = wp.half_length();
    if !(s.abs() <= h) {
        return Err(RcaError::domain(format!("axial offset {s} outside [-{h}, {h}]")));
    }
    let denom = wp.feed_sine()?;
    Ok(current_unchecked(s, wp.k, h, denom))
}

#[inline]
fn current_unchecked(s: f64, k: f64, h: f64, feed_sine: f64) -> (f64, f64) {
    let (sn, cs) = (k * (h - s.abs())).sin_cos();
    let di = if s == 0.0 { 0.0 } else { -k * s.signum() * cs / feed_sine };
    (sn / feed_sine, di)
}

/// Iterated Gauss–Legendre integrator for the mutual-impedance kernel.
///
/// The outer integral runs along wire `i` and the inner one along wire `j`.
/// Both are split at the feed (`s = 0`, `t = 0`). The inner panels are
/// also split at the foot point `t*(s)` of the current outer node and graded
/// toward it. The outer panels are split at the closest approach `s*` and
/// at the parameters where the foot point crosses the feed or a wire end,
/// and graded toward any split point that lies close to wire `j`.
#[derive(Debug, Clone)]
pub struct MutualQuadrature {
    rule: QuadratureRule,
}

/// Number of graded layers needed toward a panel end whose kernel peak is
/// `distance` away, for a panel of length `len`.
fn grade_layers(len: f64, distance: f64) -> i32 {
    if distance >= GRADE_THRESHOLD * len {
        return 0;
    }
    let ratio = len / distance.max(len * GRADE_RATIO.powi(MAX_LAYERS));
    ((ratio.ln() / (1.0 / GRADE_RATIO).ln()).ceil() as i32).clamp(1, MAX_LAYERS)
}

/// Pushes `[a, b]` split geometrically toward `a` (`toward_a`) or `b`.
fn push_graded(panels: &mut Vec<(f64, f64)>, a: f64, b: f64, layers: i32, toward_a: bool) {
    let len = b - a;
    let mut prev = 0.0;
    for p in (0..=layers).rev() {
        let next = if p == 0 { len } else { len * GRADE_RATIO.powi(p) };
        panels.push(if toward_a { (a + prev, a + next) } else { (b - next, b - prev) });
        prev = next;
    }
}

/// Splits the sorted breakpoints into panels, grading each end according to
/// the peak distance `dist(x)` at that breakpoint.
fn build_panels(breaks: &[f64], dist: impl Fn(f64) -> f64, panels: &mut Vec<(f64, f64)>) {
    panels.clear();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = b - a;
        if !(len > 0.0) {
            continue;
        }
        let (la, lb) = (grade_layers(len, dist(a)), grade_layers(len, dist(b)));
        match (la > 0, lb > 0) {
            (false, false) => panels.push((a, b)),
            (true, false) => push_graded(panels, a, b, la, true),
            (false, true) => push_graded(panels, a, b, lb, false),
            (true, true) => {
                let m = 0.5 * (a + b);
                push_graded(panels, a, m, grade_layers(0.5 * len, dist(a)).max(1), true);
                push_graded(panels, m, b, grade_layers(0.5 * len, dist(b)).max(1), false);
            }
        }
    }
}

/// Sorted breakpoints in `[-h, h]`, merging values closer than `h·1e-9`.
fn breakpoints(h: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![-h, 0.0, h];
    b.extend(extra.iter().filter(|x| x.is_finite()).map(|x| x.clamp(-h, h)));
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * h);
    b
}

impl MutualQuadrature {
    pub fn new(order: usize) -> Result<Self> {
        Ok(MutualQuadrature {
            rule: gauss_legendre(order)?,
        })
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    /// Mutual impedance between wires centered at `pi`, `pj` with axes `ui`,
    /// `uj`. The caller guarantees the wires do not intersect.
    pub fn mutual(&self, pi: &Vec3, ui: &UnitAxis, pj: &Vec3, uj: &UnitAxis, wp: &WireParameters) -> Result<Complex64> {
        let feed_sine = wp.feed_sine()?;
        let h = wp.half_length();
        let k = wp.k;
        let (a, b) = (ui.vector(), uj.vector());
        let (distance, s_star, _) = segment_closest_points(pi, ui, pj, uj, h);
        if !(distance > 0.0) {
            return Err(RcaError::domain("mutual impedance of intersecting wires"));
        }

        // Foot point of P(s) = pi + s·ui on the infinite line through wire j
        // is t = f0 + s·cosγ; clamped to the segment for distances.
        let r0 = pi - pj;
        let cos_g = ui.dot(uj);
        let f0 = b.dot(&r0);
        let foot = |s: f64| (f0 + s * cos_g).clamp(-h, h);
        let dist_to_j = |s: f64| (r0 + a * s - b * foot(s)).norm();

        // Extra split points only matter where wire j comes close.
        let near = GRADE_THRESHOLD * h;
        let mut outer_extra = vec![s_star];
        if cos_g.abs() > 1e-12 {
            outer_extra.extend([0.0, -h, h].iter().map(|t| (t - f0) / cos_g).filter(|s| s.abs() < h));
        }
        outer_extra.retain(|&s| dist_to_j(s) < near);
        let mut outer = Vec::new();
        build_panels(&breakpoints(h, &outer_extra), dist_to_j, &mut outer);

        let k2_dot = k * k * cos_g;
        let mut panels = Vec::new();
        let mut last_panels: Vec<(f64, f64)> = Vec::new();
        // (t, weight, I(t), I'(t)) for the current inner panels.
        let mut nodes: Vec<(f64, f64, f64, f64)> = Vec::new();
        let mut total = Complex64::new(0.0, 0.0);
        for &(s0, s1) in &outer {
            for (s, ws) in self.rule.mapped(s0, s1) {
                let p = pi + a * s;
                let t_foot = foot(s);
                let d_perp = (p - pj - b * t_foot).norm();
                let extra: &[f64] = if d_perp < near { &[t_foot] } else { &[] };
                build_panels(&breakpoints(h, extra), |t| (t - t_foot).abs().max(d_perp), &mut panels);
                if panels != last_panels {
                    nodes.clear();
                    for &(t0, t1) in &panels {
                        nodes.extend(self.rule.mapped(t0, t1).map(|(t, w)| {
                            let (cur, der) = current_unchecked(t, k, h, feed_sine);
                            (t, w, cur, der)
                        }));
                    }
                    std::mem::swap(&mut panels, &mut last_panels);
                }
                let q = p - pj;
                let mut with_current = Complex64::new(0.0, 0.0);
                let mut with_derivative = Complex64::new(0.0, 0.0);
                for &(t, wt, cur, der) in &nodes {
                    let r = (q - b * t).norm();
                    let (sin_kr, cos_kr) = (k * r).sin_cos();
                    let g = Complex64::new(cos_kr, -sin_kr) * (wt / r);
                    with_current += g * cur;
                    with_derivative += g * der;
                }
                let (cur, der) = current_unchecked(s, k, h, feed_sine);
                total += (with_current * (k2_dot * cur) - with_derivative * der) * ws;
            }
        }
        Ok(Complex64::new(0.0, wp.eta / (4.0 * PI * k)) * total)
    }
}

/// Transmit impedance matrix over elements `{0 (active), 1..=N (couplers)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceMatrix(DMatrix<Complex64>);

impl ImpedanceMatrix {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(RcaError::domain(format!("impedance matrix must be square and nonempty, got {}x{}", m.nrows(), m.ncols())));
        }
        Ok(ImpedanceMatrix(m))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_couplers(&self) -> usize {
        self.0.nrows() - 1
    }

    /// Common self-impedance `z_s`.
    pub fn self_term(&self) -> Complex64 {
        self.0[(0, 0)]
    }

    /// Active-to-coupler mutual impedances `z̄`.
    pub fn coupling_vector(&self) -> nalgebra::DVector<Complex64> {
        self.0.column(0).rows(1, self.num_couplers()).into_owned()
    }

    /// Coupler block `Z_E`.
    pub fn coupler_block(&self) -> DMatrix<Complex64> {
        let n = self.num_couplers();
        self.0.view((1, 1), (n, n)).into_owned()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.0.map(|z| z.re)
    }

    /// Largest `|Z_mn - Z_nm| / max|Z|`.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.0.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for m in 0..self.dim() {
            for n in m + 1..self.dim() {
                worst = worst.max((self.0[(m, n)] - self.0[(n, m)]).norm());
            }
        }
        worst / scale
    }
}

type CacheKey = [u64; 9];

/// Memo of mutual impedances keyed by relative placement and both axes.
///
/// Entries depend only on `(pⱼ - pᵢ, uᵢ, uⱼ)`, so pairs with the same
/// spacing share them. Finite-difference trials change one column at a
/// time and reuse every other entry.
#[derive(Debug, Default)]
pub struct ImpedanceCache {
    map: Mutex<HashMap<CacheKey, Complex64>>,
}

impl ImpedanceCache {
    const CAPACITY: usize = 400_000;

    fn key(pi: &Vec3, ui: &UnitAxis, pj: &Vec3, uj: &UnitAxis) -> CacheKey {
        let d = pj - pi;
        let (a, b) = (ui.vector(), uj.vector());
        [d.x, d.y, d.z, a.x, a.y, a.z, b.x, b.y, b.z].map(f64::to_bits)
    }

    fn get(&self, key: &CacheKey) -> Option<Complex64> {
        self.map.lock().expect("impedance cache poisoned").get(key).copied()
    }

    fn insert(&self, key: CacheKey, value: Complex64) {
        let mut map = self.map.lock().expect("impedance cache poisoned");
        if map.len() >= Self::CAPACITY {
            map.clear();
        }
        map.insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("impedance cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        self.map.lock().expect("impedance cache poisoned").clear();
    }
}

/// Everything needed to turn a rotation matrix into `Z_TX`.
#[derive(Debug)]
pub struct ImpedanceModel {
    wire: WireParameters,
    quadrature: MutualQuadrature,
    self_impedance: Complex64,
    cache: Option<ImpedanceCache>,
}

impl ImpedanceModel {
    pub fn new(wire: WireParameters, order: usize) -> Result<Self> {
        Ok(ImpedanceModel {
            self_impedance: self_impedance(&wire)?,
            quadrature: MutualQuadrature::new(order)?,
            wire,
            cache: None,
        })
    }

    /// Enables memoization of mutual impedances.
    pub fn with_cache(mut self) -> Self {
        self.cache = Some(ImpedanceCache::default());
        self
    }

    pub fn wire(&self) -> &WireParameters {
        &self.wire
    }

    pub fn order(&self) -> usize {
        self.quadrature.order()
    }

    pub fn self_impedance(&self) -> Complex64 {
        self.self_impedance
    }

    pub fn cache(&self) -> Option<&ImpedanceCache> {
        self.cache.as_ref()
    }

    fn mutual_between(&self, pi: &Vec3, ui: &UnitAxis, pj: &Vec3, uj: &UnitAxis) -> Result<Complex64> {
        let Some(cache) = &self.cache else {
            return self.quadrature.mutual(pi, ui, pj, uj, &self.wire);
        };
        let key = ImpedanceCache::key(pi, ui, pj, uj);
        if let Some(z) = cache.get(&key) {
            return Ok(z);
        }
        let z = self.quadrature.mutual(pi, ui, pj, uj, &self.wire)?;
        cache.insert(key, z);
        Ok(z)
    }

    /// Mutual impedance between elements `i ≠ j`.
    pub fn mutual(&self, i: usize, j: usize, u: &RotationAxisMatrix, geom: &ElementGeometry) -> Result<Complex64> {
        if i == j {
            return Err(RcaError::domain(format!("element {i} has a self-impedance, not a mutual one")));
        }
        geom.check_dimensions(u)?;
        let (ui, uj) = (geom.axis(i, u), geom.axis(j, u));
        let (pi, pj) = (geom.center(i), geom.center(j));
        let d = segment_closest_points(pi, &ui, pj, &uj, geom.half_length()).0;
        if d < 2.0 * geom.dipole_radius() {
            return Err(RcaError::domain(format!(
                "elements {i} and {j} overlap: axis distance {d:.3e} m < 2a"
            )));
        }
        self.mutual_between(pi, &ui, pj, &uj)
    }

    /// Full `Z_TX(U)`. Entries are evaluated for `i < j` and mirrored, so
    /// the result is exactly symmetric and independent of evaluation order.
    pub fn assemble(&self, u: &RotationAxisMatrix, geom: &ElementGeometry) -> Result<ImpedanceMatrix> {
        self.check_wire(geom)?;
        geom.check_dimensions(u)?;
        let n = geom.num_elements();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let values = pairs
            .par_iter()
            .map(|&(i, j)| self.mutual(i, j, u, geom))
            .collect::<Result<Vec<_>>>()?;
        let mut m = DMatrix::from_element(n, n, self.self_impedance);
        for (&(i, j), &z) in pairs.iter().zip(&values) {
            m[(i, j)] = z;
            m[(j, i)] = z;
        }
        Ok(ImpedanceMatrix(m))
    }

    /// Largest relative change of any mutual entry when the per-panel order
    /// is doubled.
    pub fn convergence_gap(&self, u: &RotationAxisMatrix, geom: &ElementGeometry) -> Result<f64> {
        let fine = MutualQuadrature::new(2 * self.order())?;
        let n = geom.num_elements();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let coarse = self.mutual(i, j, u, geom)?;
                let (ui, uj) = (geom.axis(i, u), geom.axis(j, u));
                let precise = fine.mutual(geom.center(i), &ui, geom.center(j), &uj, &self.wire)?;
                worst = worst.max((coarse - precise).norm() / precise.norm());
            }
        }
        Ok(worst)
    }

    fn check_wire(&self, geom: &ElementGeometry) -> Result<()> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same(geom.dipole_length(), self.wire.dipole_length) || !same(geom.dipole_radius(), self.wire.dipole_radius) {
            return Err(RcaError::domain("geometry and wire parameters disagree on the dipole dimensions"));
        }
        Ok(())
    }
}

/// Mutual impedance between elements `i` and `j` with the default rule.
pub fn mutual_impedance(i: usize, j: usize, u: &RotationAxisMatrix, geom: &ElementGeometry, wp: &WireParameters) -> Result<Complex64> {
    ImpedanceModel::new(*wp, DEFAULT_ORDER)?.mutual(i, j, u, geom)
}

/// `Z_TX(U)` with the default rule and no memoization.
pub fn assemble_impedance_matrix(u: &RotationAxisMatrix, geom: &ElementGeometry, wp: &WireParameters) -> Result<ImpedanceMatrix> {
    ImpedanceModel::new(*wp, DEFAULT_ORDER)?.assemble(u, geom)
}
