//! Induced-current beamforming, radiated power, SNR and rate.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{effective_channel, path_channel, pattern_normalization, ChannelRealization, PathSpec, PatternNormalization};
use crate::coupling::{ImpedanceMatrix, ImpedanceModel};
use crate::error::{RcaError, Result};
use crate::geometry::{is_feasible, ElementGeometry, RotationAxisMatrix, SphericalCap};

/// Largest accepted 1-norm condition estimate of `Z_E + X`.
pub const MAX_CONDITION: f64 = 1e12;

/// Largest accepted relative residual of the coupler-current solve.
pub const MAX_RESIDUAL: f64 = 1e-10;

/// Objective value reported for an exact channel null.
pub const NULL_OBJECTIVE: f64 = -1e300;

/// Floor applied to normalized beampatterns, in dB.
pub const PATTERN_FLOOR_DB: f64 = -300.0;

/// Diagonal coupler loads `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadMatrix {
    loads: Vec<Complex64>,
}

impl LoadMatrix {
    pub fn new(loads: Vec<Complex64>) -> Result<Self> {
        if let Some(z) = loads.iter().find(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(RcaError::domain(format!("load impedance must be finite, got {z}")));
        }
        Ok(LoadMatrix { loads })
    }

    /// The same load on each of `n` couplers.
    pub fn uniform(n: usize, load: Complex64) -> Result<Self> {
        Self::new(vec![load; n])
    }

    pub fn loads(&self) -> &[Complex64] {
        &self.loads
    }

    pub fn len(&self) -> usize {
        self.loads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loads.is_empty()
    }
}

/// Coupler currents and power bookkeeping for one rotation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingResult {
    pub w: DVector<Complex64>,
    /// `[1, -w]`.
    pub w_e: DVector<Complex64>,
    /// Squared active-port current delivering the transmit power.
    pub i0_squared: f64,
    /// Normalized gain `Ω`.
    pub effective_gain: f64,
}

/// Solves `(Z_E + X) w = z̄` and returns `(w, [1, -w])`.
pub fn solve_beamforming(z: &ImpedanceMatrix, x: &LoadMatrix) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
    let n = z.num_couplers();
    if x.len() != n {
        return Err(RcaError::domain(format!("{} loads for {n} couplers", x.len())));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DVector::from_element(1, Complex64::new(1.0, 0.0))));
    }
    let mut a = z.coupler_block();
    for (m, load) in x.loads().iter().enumerate() {
        a[(m, m)] += load;
    }
    let rhs = z.coupling_vector();

    let lu = a.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| RcaError::Numerical {
        message: "coupler system Z_E + X is singular".into(),
        condition: f64::INFINITY,
    })?;
    let condition = one_norm(&a) * one_norm(&inverse);
    if !(condition < MAX_CONDITION) {
        return Err(RcaError::Numerical {
            message: "coupler system Z_E + X is ill-conditioned".into(),
            condition,
        });
    }
    let mut w = lu.solve(&rhs).expect("nonsingular after inversion");
    let scale = rhs.norm();
    let residual = |w: &DVector<Complex64>| &rhs - &a * w;
    let mut r = residual(&w);
    if r.norm() > MAX_RESIDUAL * scale {
        w += lu.solve(&r).expect("nonsingular after inversion");
        r = residual(&w);
    }
    if r.norm() > MAX_RESIDUAL * scale {
        return Err(RcaError::Numerical {
            message: format!("coupler solve residual {:.3e} exceeds tolerance", r.norm() / scale),
            condition,
        });
    }
    let w_e = DVector::from_iterator(n + 1, std::iter::once(Complex64::new(1.0, 0.0)).chain(w.iter().map(|c| -c)));
    Ok((w, w_e))
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Radiated power per unit `|i₀|²`: `w_eᴴ Re{Z} w_e`.
pub fn transmit_power_quadratic(z: &ImpedanceMatrix, w_e: &DVector<Complex64>) -> Result<f64> {
    if w_e.len() != z.dim() {
        return Err(RcaError::domain(format!("current vector has {} entries for a {}-port matrix", w_e.len(), z.dim())));
    }
    let re = z.real_part();
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..z.dim() {
        for n in 0..z.dim() {
            acc += w_e[m].conj() * re[(m, n)] * w_e[n];
        }
    }
    let p = acc.re;
    if !(p > 0.0 && p.is_finite()) {
        return Err(RcaError::ModelViolation(format!("radiated power w_eᴴ Re{{Z}} w_e = {p:.6e} is not positive")));
    }
    Ok(p)
}

/// `log₂(1 + r)`.
pub fn rate_from_snr(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

/// `ln Ω`, with [`NULL_OBJECTIVE`] for `Ω = 0`.
pub fn objective_from_gain(omega: f64) -> f64 {
    if omega > 0.0 {
        omega.ln()
    } else {
        NULL_OBJECTIVE
    }
}

/// Everything produced by one pass of the objective pipeline.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub impedance: ImpedanceMatrix,
    pub beamforming: BeamformingResult,
    pub channel: DVector<Complex64>,
    pub snr: f64,
    pub rate: f64,
    pub objective: f64,
}

/// A fixed link: array geometry, loads, channel and power budget.
#[derive(Debug, Clone)]
pub struct Scenario {
    geometry: ElementGeometry,
    impedance: Arc<ImpedanceModel>,
    loads: LoadMatrix,
    channel: ChannelRealization,
    normalization: PatternNormalization,
    cap: SphericalCap,
    transmit_power: f64,
    noise_power: f64,
}

impl Scenario {
    /// Powers are in watts.
    pub fn new(
        geometry: ElementGeometry,
        impedance: Arc<ImpedanceModel>,
        loads: LoadMatrix,
        channel: ChannelRealization,
        cap: SphericalCap,
        transmit_power: f64,
        noise_power: f64,
    ) -> Result<Self> {
        if loads.len() != geometry.num_couplers() {
            return Err(RcaError::domain(format!("{} loads for {} couplers", loads.len(), geometry.num_couplers())));
        }
        if !(transmit_power > 0.0 && noise_power > 0.0 && transmit_power.is_finite() && noise_power.is_finite()) {
            return Err(RcaError::domain(format!(
                "transmit and noise power must be positive, got P = {transmit_power} W, σ² = {noise_power} W"
            )));
        }
        let wire = impedance.wire();
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same(wire.dipole_length, geometry.dipole_length()) || !same(wire.dipole_radius, geometry.dipole_radius()) {
            return Err(RcaError::domain("geometry and wire parameters disagree on the dipole dimensions"));
        }
        Ok(Scenario {
            normalization: pattern_normalization(wire),
            geometry,
            impedance,
            loads,
            channel,
            cap,
            transmit_power,
            noise_power,
        })
    }

    pub fn geometry(&self) -> &ElementGeometry {
        &self.geometry
    }

    pub fn impedance_model(&self) -> &Arc<ImpedanceModel> {
        &self.impedance
    }

    pub fn loads(&self) -> &LoadMatrix {
        &self.loads
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.channel
    }

    pub fn normalization(&self) -> &PatternNormalization {
        &self.normalization
    }

    pub fn cap(&self) -> &SphericalCap {
        &self.cap
    }

    pub fn num_couplers(&self) -> usize {
        self.geometry.num_couplers()
    }

    pub fn transmit_power(&self) -> f64 {
        self.transmit_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    /// `P/σ²`.
    pub fn power_ratio(&self) -> f64 {
        self.transmit_power / self.noise_power
    }

    pub fn with_transmit_power(&self, watts: f64) -> Result<Self> {
        let mut s = self.clone();
        if !(watts > 0.0 && watts.is_finite()) {
            return Err(RcaError::domain(format!("transmit power must be positive, got {watts} W")));
        }
        s.transmit_power = watts;
        Ok(s)
    }

    pub fn with_channel(&self, channel: ChannelRealization) -> Self {
        Scenario { channel, ..self.clone() }
    }

    pub fn with_cap(&self, cap: SphericalCap) -> Self {
        Scenario { cap, ..self.clone() }
    }

    pub fn is_feasible(&self, u: &RotationAxisMatrix) -> Result<bool> {
        is_feasible(u, &self.cap, &self.geometry)
    }

    /// Runs impedance assembly, the coupler solve and the SNR chain.
    pub fn evaluate(&self, u: &RotationAxisMatrix) -> Result<Evaluation> {
        let impedance = self.impedance.assemble(u, &self.geometry)?;
        let (w, w_e) = solve_beamforming(&impedance, &self.loads)?;
        let power = transmit_power_quadratic(&impedance, &w_e)?;
        let h = effective_channel(u, &self.channel, &self.geometry, self.impedance.wire(), &self.normalization)?;
        let omega = h.dot(&w_e).norm_sqr() / power;
        let snr = self.power_ratio() * omega;
        Ok(Evaluation {
            beamforming: BeamformingResult {
                w,
                w_e,
                i0_squared: self.transmit_power / power,
                effective_gain: omega,
            },
            impedance,
            channel: h,
            snr,
            rate: rate_from_snr(snr),
            objective: objective_from_gain(omega),
        })
    }

    /// Normalized gain `Ω(U)`.
    pub fn gain(&self, u: &RotationAxisMatrix) -> Result<f64> {
        Ok(self.evaluate(u)?.beamforming.effective_gain)
    }
}

/// Linear receive SNR `r(U)`.
pub fn snr(u: &RotationAxisMatrix, scenario: &Scenario) -> Result<f64> {
    Ok(scenario.evaluate(u)?.snr)
}

/// `Φ(U) = ln Ω(U)`.
pub fn objective(u: &RotationAxisMatrix, scenario: &Scenario) -> Result<f64> {
    Ok(scenario.evaluate(u)?.objective)
}

/// `log₂(1 + r(U))` in bits/s/Hz.
pub fn achievable_rate(u: &RotationAxisMatrix, scenario: &Scenario) -> Result<f64> {
    Ok(scenario.evaluate(u)?.rate)
}

/// Normalized power pattern `|gᵀ(ψ, φ) w_e|²` over `phi_grid`, in dB with
/// a 0 dB peak.
pub fn beampattern(u: &RotationAxisMatrix, scenario: &Scenario, psi_fixed: f64, phi_grid: &[f64]) -> Result<Vec<f64>> {
    if phi_grid.is_empty() {
        return Err(RcaError::domain("beampattern needs a nonempty azimuth grid"));
    }
    let z = scenario.impedance.assemble(u, &scenario.geometry)?;
    let (_, w_e) = solve_beamforming(&z, &scenario.loads)?;
    let wire = scenario.impedance.wire();
    let powers = phi_grid
        .iter()
        .map(|&phi| {
            let probe = PathSpec::new(psi_fixed, phi, Complex64::new(1.0, 0.0))?;
            let g = path_channel(u, &probe, &scenario.geometry, wire, &scenario.normalization)?;
            Ok(g.dot(&w_e).norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    let peak = powers.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(RcaError::ModelViolation("array response vanishes on the whole grid".into()));
    }
    Ok(powers.iter().map(|p| (10.0 * (p / peak).log10()).max(PATTERN_FLOOR_DB)).collect())
}

/// Summary of an evaluation suitable for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct LinkSummary {
    pub snr: f64,
    pub rate_bps_hz: f64,
    pub objective: f64,
    pub effective_gain: f64,
}

impl From<&Evaluation> for LinkSummary {
    fn from(e: &Evaluation) -> Self {
        LinkSummary {
            snr: e.snr,
            rate_bps_hz: e.rate,
            objective: e.objective,
            effective_gain: e.beamforming.effective_gain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{WireParameters, DEFAULT_ORDER, FREE_SPACE_IMPEDANCE};
    use crate::geometry::UnitAxis;
    use std::f64::consts::PI;

    const LAMBDA: f64 = 0.042827494;

    fn model() -> Arc<ImpedanceModel> {
        let wp = WireParameters::new(LAMBDA, LAMBDA / 2.0, LAMBDA / 500.0, FREE_SPACE_IMPEDANCE).unwrap();
        Arc::new(ImpedanceModel::new(wp, DEFAULT_ORDER).unwrap().with_cache())
    }

    fn scenario(n: usize, channel: ChannelRealization) -> Scenario {
        let m = model();
        let xs: Vec<f64> = (1..=n).map(|i| i as f64 * LAMBDA / 4.0).collect();
        let g = ElementGeometry::on_x_axis(&xs, LAMBDA / 2.0, LAMBDA / 500.0).unwrap();
        let loads = LoadMatrix::uniform(n, Complex64::new(0.05, 50.0)).unwrap();
        Scenario::new(g, m, loads, channel, SphericalCap::new(PI).unwrap(), 1.0, 1e-12).unwrap()
    }

    fn sample_u(n: usize) -> RotationAxisMatrix {
        let angles = [(0.4, 0.3), (1.3, -2.0), (2.2, 1.1), (0.9, 2.9)];
        RotationAxisMatrix::new(angles[..n].iter().map(|&(t, a)| UnitAxis::from_angles(t, a).unwrap()).collect())
    }

    fn paths() -> ChannelRealization {
        ChannelRealization::new(vec![
            PathSpec::new(1.0, 0.5, Complex64::new(1e-5, 2e-5)).unwrap(),
            PathSpec::new(2.1, -1.7, Complex64::new(-3e-5, 0.5e-5)).unwrap(),
            PathSpec::new(0.3, 2.9, Complex64::new(0.2e-5, -1e-5)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn bare_antenna_solve() {
        let s = scenario(0, paths());
        let z = s.impedance_model().assemble(&RotationAxisMatrix::fixed(0), s.geometry()).unwrap();
        let (w, w_e) = solve_beamforming(&z, s.loads()).unwrap();
        assert_eq!(w.len(), 0);
        assert_eq!(w_e.as_slice(), &[Complex64::new(1.0, 0.0)]);
        assert_eq!(transmit_power_quadratic(&z, &w_e).unwrap(), z.self_term().re);
    }

    #[test]
    fn single_coupler_is_scalar_division() {
        let s = scenario(1, paths());
        let u = sample_u(1);
        let z = s.impedance_model().assemble(&u, s.geometry()).unwrap();
        let (w, w_e) = solve_beamforming(&z, s.loads()).unwrap();
        let expected = z.matrix()[(1, 0)] / (z.self_term() + s.loads().loads()[0]);
        assert!((w[0] - expected).norm() < 1e-14 * expected.norm());
        assert_eq!(w_e[1], -w[0]);
    }

    #[test]
    fn three_couplers_match_explicit_inverse() {
        let s = scenario(3, paths());
        let z = s.impedance_model().assemble(&sample_u(3), s.geometry()).unwrap();
        let (w, _) = solve_beamforming(&z, s.loads()).unwrap();
        let mut a = z.coupler_block();
        for m in 0..3 {
            a[(m, m)] += Complex64::new(0.05, 50.0);
        }
        // Cofactor inverse of the 3x3 system.
        let det = a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)])
            - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
            + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
        let cof = |r: usize, c: usize| {
            let rows: Vec<usize> = (0..3).filter(|&i| i != r).collect();
            let cols: Vec<usize> = (0..3).filter(|&i| i != c).collect();
            let m = a[(rows[0], cols[0])] * a[(rows[1], cols[1])] - a[(rows[0], cols[1])] * a[(rows[1], cols[0])];
            if (r + c).is_multiple_of(2) { m } else { -m }
        };
        let zbar = z.coupling_vector();
        for i in 0..3 {
            let oracle: Complex64 = (0..3).map(|j| cof(j, i) / det * zbar[j]).sum();
            assert!((w[i] - oracle).norm() < 1e-10 * oracle.norm());
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let z = ImpedanceMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[
            Complex64::new(73.0, 42.0), Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0), Complex64::new(73.0, 42.0),
        ])).unwrap();
        let loads = LoadMatrix::uniform(1, Complex64::new(-73.0, -42.0)).unwrap();
        assert!(matches!(solve_beamforming(&z, &loads), Err(RcaError::Numerical { .. })));
    }

    #[test]
    fn power_uses_only_real_part() {
        let s = scenario(2, paths());
        let z = s.impedance_model().assemble(&sample_u(2), s.geometry()).unwrap();
        let (_, w_e) = solve_beamforming(&z, s.loads()).unwrap();
        let p = transmit_power_quadratic(&z, &w_e).unwrap();
        let stripped = ImpedanceMatrix::from_matrix(z.matrix().map(|c| Complex64::new(c.re, 0.0))).unwrap();
        assert_eq!(transmit_power_quadratic(&stripped, &w_e).unwrap(), p);
        // Direct Re{i_TXᴴ Z i_TX}/|i0|² with a complex i0.
        let i0 = Complex64::new(0.3, -1.2);
        let i_tx = &w_e * i0;
        let direct = (i_tx.adjoint() * z.matrix() * &i_tx)[(0, 0)].re / i0.norm_sqr();
        assert!((direct - p).abs() < 1e-10 * p);
    }

    #[test]
    fn bare_antenna_snr_closed_form() {
        let gamma = Complex64::new(2e-5, -1e-5);
        let ch = ChannelRealization::new(vec![PathSpec::new(1.1, 0.2, gamma).unwrap()]).unwrap();
        let s = scenario(0, ch);
        let u = RotationAxisMatrix::fixed(0);
        let z_s = s.impedance_model().self_impedance();
        let eta = s.impedance_model().wire().eta;
        let expected = s.transmit_power() * gamma.norm_sqr() * (eta / PI) / (s.noise_power() * z_s.re);
        let r = snr(&u, &s).unwrap();
        assert!((r - expected).abs() < 1e-12 * expected);
        let phi = objective(&u, &s).unwrap();
        assert!((phi - (gamma.norm_sqr() * eta / PI / z_s.re).ln()).abs() < 1e-12);
    }

    #[test]
    fn snr_scaling() {
        let s = scenario(3, paths());
        let u = sample_u(3);
        let r = snr(&u, &s).unwrap();
        let c = Complex64::new(0.6, -2.0);
        let scaled = s.with_channel(s.channel().scaled(c));
        assert!((snr(&u, &scaled).unwrap() - r * c.norm_sqr()).abs() < 1e-12 * r * c.norm_sqr());
        let doubled = s.with_transmit_power(2.0 * s.transmit_power()).unwrap();
        assert!((snr(&u, &doubled).unwrap() - 2.0 * r).abs() < 1e-12 * r);
        let rotated = s.with_channel(s.channel().scaled(Complex64::from_polar(1.0, 0.77)));
        assert!((objective(&u, &rotated).unwrap() - objective(&u, &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn load_and_impedance_scale_leave_w_unchanged() {
        let s = scenario(2, paths());
        let z = s.impedance_model().assemble(&sample_u(2), s.geometry()).unwrap();
        let (w, _) = solve_beamforming(&z, s.loads()).unwrap();
        let scaled_z = ImpedanceMatrix::from_matrix(z.matrix() * Complex64::new(3.5, 0.0)).unwrap();
        let scaled_x = LoadMatrix::uniform(2, Complex64::new(0.05, 50.0) * 3.5).unwrap();
        let (w2, _) = solve_beamforming(&scaled_z, &scaled_x).unwrap();
        assert!((&w - &w2).norm() < 1e-12 * w.norm());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_from_snr(0.0), 0.0);
        assert!((rate_from_snr(1.0) - 1.0).abs() < 1e-15);
        assert!((rate_from_snr(3.0) - 2.0).abs() < 1e-15);
        assert_eq!(objective_from_gain(1.0), 0.0);
        assert_eq!(objective_from_gain(0.0), NULL_OBJECTIVE);
    }

    #[test]
    fn objective_and_gain_share_argmax() {
        let s = scenario(2, paths());
        let cands: Vec<RotationAxisMatrix> = (0..6)
            .map(|i| {
                let t = 0.2 + 0.4 * i as f64;
                RotationAxisMatrix::new(vec![UnitAxis::from_angles(t, 0.5).unwrap(), UnitAxis::from_angles(3.0 - t, -1.0).unwrap()])
            })
            .filter(|u| s.is_feasible(u).unwrap())
            .collect();
        assert!(cands.len() >= 3);
        let evals: Vec<Evaluation> = cands.iter().map(|u| s.evaluate(u).unwrap()).collect();
        let arg = |f: &dyn Fn(&Evaluation) -> f64| {
            (0..evals.len()).max_by(|&a, &b| f(&evals[a]).total_cmp(&f(&evals[b]))).unwrap()
        };
        assert_eq!(arg(&|e| e.objective), arg(&|e| e.beamforming.effective_gain));
        assert_eq!(arg(&|e| e.rate), arg(&|e| e.objective));
    }

    #[test]
    fn beampattern_examples() {
        let grid: Vec<f64> = (0..73).map(|i| -PI + i as f64 * PI / 36.0).collect();
        let bare = scenario(0, paths());
        for v in beampattern(&RotationAxisMatrix::fixed(0), &bare, 55f64.to_radians(), &grid).unwrap() {
            assert!(v.abs() < 1e-12);
        }
        let s = scenario(3, paths());
        let fixed = RotationAxisMatrix::fixed(3);
        let p = beampattern(&fixed, &s, 55f64.to_radians(), &grid).unwrap();
        assert_eq!(p.iter().copied().fold(f64::MIN, f64::max), 0.0);
        for i in 0..grid.len() {
            assert!((p[i] - p[grid.len() - 1 - i]).abs() < 1e-9, "φ symmetry at {i}");
        }
        assert!(beampattern(&fixed, &s, 1.0, &[]).is_err());
    }
}
