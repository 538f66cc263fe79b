//! Special functions and quadrature primitives.
//!
//! The sine and cosine integrals use their Maclaurin series below
//! [`SERIES_LIMIT`] and the continued fraction for the complex exponential
//! integral `E1(ix)` above it. Both branches are accurate to roughly 1e-14
//! absolute over the whole positive axis.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{RcaError, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Switch point between the power series and the continued fraction.
const SERIES_LIMIT: f64 = 4.0;

const MAX_TERMS: usize = 200;

/// Sine integral `Si(x) = ∫₀ˣ sin(t)/t dt`, extended as an odd function.
pub fn sine_integral(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(RcaError::domain(format!("sine integral of non-finite {x}")));
    }
    if x < 0.0 {
        return sine_integral(-x).map(|v| -v);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < SERIES_LIMIT {
        Ok(sine_series(x))
    } else {
        Ok(cisi_continued_fraction(x).1)
    }
}

/// Cosine integral `Ci(x) = -∫ₓ^∞ cos(t)/t dt` for `x > 0`.
pub fn cosine_integral(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(RcaError::domain(format!(
            "cosine integral requires a finite positive argument, got {x}"
        )));
    }
    if x < SERIES_LIMIT {
        Ok(cosine_series(x))
    } else {
        Ok(cisi_continued_fraction(x).0)
    }
}

fn sine_series(x: f64) -> f64 {
    // term_k = (-1)^k x^(2k+1) / (2k+1)!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..MAX_TERMS {
        let n = (2 * k) as f64;
        term *= -x2 / (n * (n + 1.0));
        let contrib = term / (n + 1.0);
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn cosine_series(x: f64) -> f64 {
    // term_k = (-1)^k x^(2k) / (2k)!
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        let n = (2 * k) as f64;
        term *= -x2 / ((n - 1.0) * n);
        let contrib = term / n;
        sum += contrib;
        if contrib.abs() < 1e-17 * (sum.abs() + 1e-300) {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// Returns `(Ci(x), Si(x))` from the continued fraction of `E1(ix)`
/// (modified Lentz evaluation). Converges quickly for `x ≳ 2`.
fn cisi_continued_fraction(x: f64) -> (f64, f64) {
    const TINY: f64 = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 2..MAX_TERMS {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < 1e-16 {
            break;
        }
    }
    let h = Complex64::new(x.cos(), -x.sin()) * h;
    (-h.re, FRAC_PI_2 + h.im)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub const MAX_ORDER: usize = 1024;

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Abscissae in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integrates `f` over `[a, b]` with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Builds the `order`-point Gauss–Legendre rule by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > QuadratureRule::MAX_ORDER {
        return Err(RcaError::domain(format!(
            "Gauss-Legendre order must be in 1..={}, got {order}",
            QuadratureRule::MAX_ORDER
        )));
    }
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson oracle, independent of the Gauss–Legendre code.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            let delta = left + right - whole;
            if depth == 0 || delta.abs() <= 15.0 * tol {
                left + right + delta / 15.0
            } else {
                rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                    + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
            }
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 40)
    }

    /// Integrates over `[0, x]` in panels of width at most 1.
    fn panels<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let n = x.ceil().max(1.0) as usize;
        let h = x / n as f64;
        (0..n)
            .map(|i| simpson(&f, i as f64 * h, (i + 1) as f64 * h, 1e-15))
            .sum()
    }

    fn si_oracle(x: f64) -> f64 {
        panels(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, x)
    }

    fn ci_oracle(x: f64) -> f64 {
        // Ci(x) = γ + ln x + ∫₀ˣ (cos t − 1)/t dt
        let g = |t: f64| {
            if t.abs() < 1e-4 {
                -t / 2.0 + t * t * t / 24.0
            } else {
                (t.cos() - 1.0) / t
            }
        };
        EULER_GAMMA + x.ln() + panels(g, x)
    }

    #[test]
    fn si_at_zero_is_zero() {
        assert_eq!(sine_integral(0.0).unwrap(), 0.0);
    }

    #[test]
    fn si_at_pi() {
        let v = sine_integral(PI).unwrap();
        assert!((v - si_oracle(PI)).abs() < 1e-10);
        assert!((v - 1.851_937_051_982_466).abs() < 1e-12);
    }

    #[test]
    fn si_large_argument_asymptote() {
        let x = 100.0_f64;
        let asym = FRAC_PI_2 - x.cos() / x * (1.0 - 2.0 / (x * x)) - x.sin() / (x * x) * (1.0 - 6.0 / (x * x));
        assert!((sine_integral(x).unwrap() - asym).abs() < 1e-8);
    }

    #[test]
    fn ci_at_one() {
        let v = cosine_integral(1.0).unwrap();
        assert!((v - ci_oracle(1.0)).abs() < 1e-10);
        assert!((v - 0.337_403_922_900_968_1).abs() < 1e-12);
    }

    #[test]
    fn ci_small_argument_series() {
        let x = 1e-4_f64;
        let approx = EULER_GAMMA + x.ln() - x * x / 4.0;
        assert!((cosine_integral(x).unwrap() - approx).abs() < 1e-9);
    }

    #[test]
    fn ci_decays() {
        assert!(cosine_integral(1000.0).unwrap().abs() < 1.1e-3);
    }

    #[test]
    fn domain_errors() {
        assert!(cosine_integral(0.0).is_err());
        assert!(cosine_integral(-1.0).is_err());
        assert!(cosine_integral(f64::NAN).is_err());
        assert!(sine_integral(f64::INFINITY).is_err());
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(1025).is_err());
    }

    #[test]
    fn special_functions_match_oracle_on_grid() {
        // Log-spaced points across [1e-4, 1e3], including both branches.
        for i in 0..=28 {
            let x = 10f64.powf(-4.0 + 7.0 * i as f64 / 28.0);
            let si = sine_integral(x).unwrap();
            let ci = cosine_integral(x).unwrap();
            assert!((si - si_oracle(x)).abs() < 1e-9, "Si({x})");
            assert!((ci - ci_oracle(x)).abs() < 1e-9, "Ci({x})");
        }
        // Around the branch switch.
        for x in [3.9, 3.999_999, 4.0, 4.000_001, 4.5] {
            assert!((sine_integral(x).unwrap() - si_oracle(x)).abs() < 1e-10);
            assert!((cosine_integral(x).unwrap() - ci_oracle(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn si_is_monotone_and_bounded_on_zero_pi() {
        let top = sine_integral(PI).unwrap();
        let mut prev = 0.0;
        for i in 1..=200 {
            let v = sine_integral(PI * i as f64 / 200.0).unwrap();
            assert!(v >= prev && v <= top + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn low_order_rules() {
        let r1 = gauss_legendre(1).unwrap();
        assert_eq!(r1.nodes(), &[0.0]);
        assert_eq!(r1.weights(), &[2.0]);
        let r2 = gauss_legendre(2).unwrap();
        let x = 1.0 / 3f64.sqrt();
        assert!((r2.nodes()[0] + x).abs() < 1e-15 && (r2.nodes()[1] - x).abs() < 1e-15);
        assert!((r2.weights()[0] - 1.0).abs() < 1e-15 && (r2.weights()[1] - 1.0).abs() < 1e-15);
        let r3 = gauss_legendre(3).unwrap();
        assert!((r3.integrate(-1.0, 1.0, |x| x.powi(4)) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exactness_up_to_order_16() {
        for m in 1..=16 {
            let rule = gauss_legendre(m).unwrap();
            for k in 0..2 * m {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact).abs() <= 1e-12 * exact.abs().max(1.0), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn large_rules_are_well_formed() {
        for m in [64, 257, 512, 1024] {
            let rule = gauss_legendre(m).unwrap();
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 2.0).abs() < 1e-12, "m={m} sum={sum}");
            assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(rule.nodes().iter().all(|&x| x > -1.0 && x < 1.0));
            assert!(rule.weights().iter().all(|&w| w > 0.0));
        }
    }

    proptest! {
        #[test]
        fn si_is_odd(x in 0.0f64..500.0) {
            prop_assert_eq!(sine_integral(-x).unwrap(), -sine_integral(x).unwrap());
        }
    }
}
