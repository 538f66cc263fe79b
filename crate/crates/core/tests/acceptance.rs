//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset with `cargo test --test acceptance -- 1 4 11`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, PI};
use std::fs;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rca_core::beamforming::rate_from_snr;
use rca_core::coupling::{ImpedanceModel, MutualQuadrature, WireParameters, DEFAULT_ORDER};
use rca_core::geometry::{segment_closest_points, RotationAxisMatrix, SphericalCap, UnitAxis, Vec3};
use rca_core::harness::baselines::{baseline_active_array, baseline_fixed_rotation, baseline_flexible_position};
use rca_core::harness::{generate_channel, rerun, run_to_dir, scheme_rca, Sweep, SystemConfig};
use rca_core::numerics::EULER_GAMMA;
use rca_core::optimizer::{fd_gradient, linear_oracle, project_tangent, OptimizerParams, Problem, StopReason};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_0000 + tag)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn random_axis(rng: &mut ChaCha8Rng) -> UnitAxis {
    UnitAxis::normalize(random_unit(rng)).expect("nonzero")
}

// ---------------------------------------------------------------------------
// Independent numerical oracles.

/// Gauss–Legendre nodes and weights by Newton iteration on the three-term
/// recurrence.
fn oracle_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = -z;
                x[n - 1 - i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                w[n - 1 - i] = w[i];
                break;
            }
        }
    }
    (x, w)
}

/// `∫ f` over `[a, b]` with `panels` equal panels of an `n`-point rule.
fn composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(m + r * x)).sum::<f64>() * r
        })
        .sum()
}

fn oracle_si(x: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    composite(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, 64, rule)
}

/// `Ci(x) = γ + ln x + ∫₀ˣ (cos t - 1)/t dt`.
fn oracle_ci(x: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let integrand = |t: f64| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t };
    EULER_GAMMA + x.ln() + composite(integrand, 0.0, x, 64, rule)
}

/// Tensor rule with 512 nodes per wire: each half of each wire carries a
/// 256-point rule, so the kinks of the current at the feeds fall on panel
/// edges.
fn brute_force_mutual(pi: &Vec3, ui: &Vec3, pj: &Vec3, uj: &Vec3, wp: &WireParameters, rule: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    let h = 0.5 * wp.dipole_length;
    let k = wp.k;
    let feed = (k * h).sin();
    let nodes: Vec<(f64, f64)> = [(-h, 0.0), (0.0, h)]
        .iter()
        .flat_map(|&(a, b)| {
            let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
            rule.0.iter().zip(&rule.1).map(move |(x, w)| (m + r * x, w * r))
        })
        .collect();
    let current = |s: f64| (k * (h - s.abs())).sin() / feed;
    let slope = |s: f64| -k * s.signum() * (k * (h - s.abs())).cos() / feed;
    let dot = ui.dot(uj);
    let mut total = Complex64::new(0.0, 0.0);
    for &(s, ws) in &nodes {
        let p = pi + ui * s;
        for &(t, wt) in &nodes {
            let r = (p - pj - uj * t).norm();
            let psi = (k * k * current(s) * current(t) * dot - slope(s) * slope(t)) / r;
            total += Complex64::from_polar(psi, -k * r) * (ws * wt);
        }
    }
    Complex64::new(0.0, wp.eta / (4.0 * PI * k)) * total
}

fn brute_segment_distance(pi: &Vec3, ui: &Vec3, pj: &Vec3, uj: &Vec3, h: f64, points: usize) -> f64 {
    let step = 2.0 * h / (points - 1) as f64;
    let mut best = f64::INFINITY;
    for a in 0..points {
        let p = pi + ui * (-h + a as f64 * step) - pj;
        for b in 0..points {
            let d = (p - uj * (-h + b as f64 * step)).norm_squared();
            if d < best {
                best = d;
            }
        }
    }
    best.sqrt()
}

// ---------------------------------------------------------------------------
// Shared optimization runs.

#[derive(Clone)]
struct Run {
    rca_rate: f64,
    fixed_rate: f64,
    /// Rate after initialization and after each accepted step.
    rate_trace: Vec<f64>,
    objectives: Vec<f64>,
    stop: StopReason,
    iterates_feasible: bool,
    iterates_reproduce: bool,
    min_gap: f64,
    wall: Duration,
}

#[derive(Hash, PartialEq, Eq, Clone, Copy)]
struct RunKey {
    n: usize,
    l: usize,
    theta_bits: u64,
    seed: u64,
}

struct Lab {
    base: SystemConfig,
    model: Arc<ImpedanceModel>,
    runs: HashMap<RunKey, Run>,
}

impl Lab {
    fn new() -> Self {
        let base = SystemConfig::default();
        let model = base.impedance_model().expect("default model");
        Lab {
            base,
            model,
            runs: HashMap::new(),
        }
    }

    fn config(&self, n: usize, l: usize, theta: f64) -> SystemConfig {
        self.base.with_couplers(n).with_paths(l).with_theta_max(theta)
    }

    /// Runs (or recalls) the optimized and fixed-rotation schemes.
    fn run(&mut self, n: usize, l: usize, theta: f64, seed: u64) -> Run {
        let key = RunKey {
            n,
            l,
            theta_bits: theta.to_bits(),
            seed,
        };
        if let Some(r) = self.runs.get(&key) {
            return r.clone();
        }
        let start = Instant::now();
        let cfg = self.config(n, l, theta);
        let scenario = cfg.scenario(&self.model, generate_channel(&cfg, seed).unwrap()).unwrap();
        let (rca, result) = scheme_rca(&scenario, &cfg, seed).unwrap();
        let fixed = baseline_fixed_rotation(&scenario).unwrap();
        let trace = &result.trace;
        let ratio = scenario.power_ratio();
        let objectives = trace.objectives();
        let iterates_feasible = trace.records.iter().all(|r| scenario.is_feasible(&r.u).unwrap());
        let iterates_reproduce = trace.records.iter().all(|r| Problem::objective(&scenario, &r.u).unwrap() == r.objective);
        let run = Run {
            rca_rate: rca.rate,
            fixed_rate: fixed.rate,
            rate_trace: objectives.iter().map(|phi| rate_from_snr(ratio * phi.exp())).collect(),
            objectives,
            stop: trace.stop,
            iterates_feasible,
            iterates_reproduce,
            min_gap: trace.gaps.iter().copied().fold(f64::INFINITY, f64::min),
            wall: start.elapsed(),
        };
        self.runs.insert(key, run.clone());
        run
    }

    fn runs(&mut self, n: usize, l: usize, theta: f64, seeds: std::ops::Range<u64>) -> Vec<Run> {
        seeds.map(|s| self.run(n, l, theta, s)).collect()
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn total_wall(runs: &[Run]) -> Duration {
    runs.iter().map(|r| r.wall).sum()
}

// ---------------------------------------------------------------------------
// Criteria.

fn c1_self_impedance(lab: &mut Lab) -> Verdict {
    let start = Instant::now();
    let wp = *lab.model.wire();
    let z = lab.model.self_impedance();
    let rule = oracle_gauss_legendre(48);
    let kd = wp.k * wp.dipole_length;
    let (s, c) = kd.sin_cos();
    let (si1, si2) = (oracle_si(kd, &rule), oracle_si(2.0 * kd, &rule));
    let (ci1, ci2) = (oracle_ci(kd, &rule), oracle_ci(2.0 * kd, &rule));
    let oracle = wp.eta / (2.0 * PI)
        * (EULER_GAMMA + kd.ln() - ci1 + 0.5 * s * (si2 - 2.0 * si1) + 0.5 * c * (EULER_GAMMA + (0.5 * kd).ln() + ci2 - 2.0 * ci1));
    let elapsed = start.elapsed();
    let ok = (z.re - 73.13).abs() <= 0.10 && (oracle - 73.13).abs() <= 0.10 && (z.re - oracle).abs() < 1e-9 && elapsed < Duration::from_secs(1);
    verdict(
        ok,
        format!(
            "Re z_s = {:.6} ohm, oracle {:.6} ohm, |diff| {:.1e}, {:.3} s",
            z.re,
            oracle,
            (z.re - oracle).abs(),
            secs(elapsed)
        ),
    )
}

fn c2_mutual_oracle(lab: &mut Lab) -> Verdict {
    let start = Instant::now();
    let wp = *lab.model.wire();
    let lambda = wp.wavelength();
    let h = 0.5 * wp.dipole_length;
    let quad = MutualQuadrature::new(DEFAULT_ORDER).unwrap();
    let rule = oracle_gauss_legendre(256);
    let mut r = rng(2);
    let (mut worst, mut worst_gap, mut pairs) = (0.0f64, f64::INFINITY, 0);
    while pairs < 100 {
        let (ui, uj) = (random_axis(&mut r), random_axis(&mut r));
        let pi = Vec3::zeros();
        let pj = random_unit(&mut r) * (r.gen_range(0.3..3.0) * lambda);
        let d = segment_closest_points(&pi, &ui, &pj, &uj, h).0;
        if d < 2.0 * wp.dipole_radius {
            continue;
        }
        pairs += 1;
        worst_gap = worst_gap.min(d);
        let z = quad.mutual(&pi, &ui, &pj, &uj, &wp).unwrap();
        let zb = brute_force_mutual(&pi, ui.vector(), &pj, uj.vector(), &wp, &rule);
        worst = worst.max((z - zb).norm() / zb.norm());
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-5 && elapsed < Duration::from_secs(120),
        format!(
            "worst relative error {worst:.2e} over {pairs} pairs (closest wire gap {:.3} lambda), {:.1} s",
            worst_gap / lambda,
            secs(elapsed)
        ),
    )
}

fn c3_reciprocity(lab: &mut Lab) -> Verdict {
    let start = Instant::now();
    let cfg = lab.base.clone();
    let geom = cfg.geometry().unwrap();
    let cap = SphericalCap::new(cfg.theta_max).unwrap();
    let model = ImpedanceModel::new(*lab.model.wire(), cfg.quadrature_order).unwrap();
    let mut r = rng(3);
    let (mut worst, mut count) = (0.0f64, 0);
    while count < 50 {
        let u = RotationAxisMatrix::new((0..cfg.num_couplers).map(|_| random_axis(&mut r)).collect());
        if !rca_core::geometry::is_feasible(&u, &cap, &geom).unwrap() {
            continue;
        }
        count += 1;
        let z = model.assemble(&u, &geom).unwrap();
        let scale = z.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let n = geom.num_elements();
        for i in 0..n {
            for j in i + 1..n {
                // Each direction integrates with the roles of the wires swapped.
                let zij = model.mutual(i, j, &u, &geom).unwrap();
                let zji = model.mutual(j, i, &u, &geom).unwrap();
                worst = worst.max((zij - zji).norm() / scale);
                worst = worst.max((z.matrix()[(i, j)] - z.matrix()[(j, i)]).norm() / scale);
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-8 && elapsed < Duration::from_secs(60),
        format!("worst relative asymmetry {worst:.2e} over {count} rotations, {:.1} s", secs(elapsed)),
    )
}

fn c4_linear_oracle(_: &mut Lab) -> Verdict {
    let start = Instant::now();
    let mut r = rng(4);
    let mut worst_violation = f64::NEG_INFINITY;
    for theta in [FRAC_PI_6, FRAC_PI_3, PI] {
        let cap = SphericalCap::new(theta).unwrap();
        let samples: Vec<Vec3> = (0..100_000)
            .map(|_| {
                let z: f64 = r.gen_range(theta.cos()..=1.0);
                let phi: f64 = r.gen_range(-PI..PI);
                let rho = (1.0 - z * z).max(0.0).sqrt();
                Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
            })
            .collect();
        let current = cap.axis();
        for _ in 0..1000 {
            let q = random_unit(&mut r) * r.gen_range(0.1..10.0);
            let best = q.dot(linear_oracle(&q, &current, &cap).vector());
            let sampled = samples.iter().map(|x| q.dot(x)).fold(f64::NEG_INFINITY, f64::max);
            worst_violation = worst_violation.max(sampled - best);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst_violation <= 1e-10 && elapsed < Duration::from_secs(30),
        format!("max sampled minus oracle value {worst_violation:.2e}, {:.1} s", secs(elapsed)),
    )
}

fn c5_segment_distance(lab: &mut Lab) -> Verdict {
    let start = Instant::now();
    let d_len = lab.model.wire().dipole_length;
    let h = 0.5 * d_len;
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (ui, uj) = (random_axis(&mut r), random_axis(&mut r));
        let pi = Vec3::zeros();
        let pj = random_unit(&mut r) * (r.gen_range(0.0..1.5) * d_len);
        let d = segment_closest_points(&pi, &ui, &pj, &uj, h).0;
        let grid = brute_segment_distance(&pi, ui.vector(), &pj, uj.vector(), h, 2001);
        worst = worst.max((d - grid).abs());
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= d_len / 1000.0 && elapsed < Duration::from_secs(60),
        format!("worst |closed form - grid| = {:.2e} D (limit 1e-3 D), {:.1} s", worst / d_len, secs(elapsed)),
    )
}

fn c6_monotone_ascent(lab: &mut Lab) -> Verdict {
    let runs = lab.runs(3, 6, PI, 0..50);
    let feasible = runs.iter().all(|r| r.iterates_feasible && r.iterates_reproduce);
    let monotone = runs.iter().all(|r| r.objectives.windows(2).all(|w| w[1] >= w[0]));
    let min_gap = runs.iter().map(|r| r.min_gap).fold(f64::INFINITY, f64::min);
    let wall = total_wall(&runs);
    verdict(
        feasible && monotone && min_gap >= -1e-12 && wall < Duration::from_secs(600),
        format!(
            "50 seeds: iterates feasible {feasible}, objective nondecreasing {monotone}, min gap {min_gap:.2e}, {:.0} s of optimization",
            secs(wall)
        ),
    )
}

fn c7_dominance(lab: &mut Lab) -> Verdict {
    let runs = lab.runs(3, 6, PI, 0..200);
    let losses = runs.iter().filter(|r| r.rca_rate < r.fixed_rate).count();
    let margin = runs.iter().map(|r| r.rca_rate - r.fixed_rate).fold(f64::INFINITY, f64::min);
    let wall = total_wall(&runs);
    verdict(
        losses == 0 && wall < Duration::from_secs(1200),
        format!(
            "200 seeds: {losses} losses, smallest margin {margin:.3e} bits/s/Hz, {:.0} s of optimization",
            secs(wall)
        ),
    )
}

fn c8_convergence(lab: &mut Lab) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    let mut finals = Vec::new();
    for n in [3, 5] {
        let runs = lab.runs(n, 6, PI, 0..100);
        let monotone = runs.iter().all(|r| r.rate_trace.windows(2).all(|w| w[1] >= w[0]));
        let converged = runs.iter().filter(|r| r.stop.converged()).count();
        let capped = runs.iter().filter(|r| r.stop == StopReason::MaxIterations).count();
        let fraction = converged as f64 / runs.len() as f64;
        ok &= monotone && fraction >= 0.95;
        let final_mean = mean(runs.iter().map(|r| *r.rate_trace.last().unwrap()));
        finals.push(final_mean);
        parts.push(format!(
            "N={n}: nondecreasing {monotone}, converged {converged}/100 ({capped} hit T_max), final mean {final_mean:.4}"
        ));
    }
    ok &= finals[1] >= finals[0];
    verdict(ok, parts.join("; "))
}

fn c9_couplers_and_cap(lab: &mut Lab) -> Verdict {
    let means: Vec<f64> = (1..=6).map(|n| mean(lab.runs(n, 6, PI, 0..100).iter().map(|r| r.rca_rate))).collect();
    let worst_dip = means.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    let wide = mean(lab.runs(6, 6, 175f64.to_radians(), 0..100).iter().map(|r| r.rca_rate));
    let narrow = mean(lab.runs(6, 6, 60f64.to_radians(), 0..100).iter().map(|r| r.rca_rate));
    verdict(
        worst_dip <= 0.05 && wide >= narrow,
        format!(
            "mean rate over N=1..6: [{}], largest dip {worst_dip:.4}; N=6 theta_max 175deg {wide:.4} vs 60deg {narrow:.4}",
            means.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c10_paths(lab: &mut Lab) -> Verdict {
    let seeds = 0..100u64;
    let mut table: Vec<[f64; 4]> = Vec::new();
    for l in 1..=12 {
        let runs = lab.runs(2, l, PI, seeds.clone());
        let cfg = lab.config(2, l, PI);
        let (mut active, mut flexible) = (0.0, 0.0);
        for s in seeds.clone() {
            let ch = generate_channel(&cfg, s).unwrap();
            active += baseline_active_array(&cfg, &lab.model, &ch).unwrap().rate;
            flexible += baseline_flexible_position(&cfg, &lab.model, &ch, s).unwrap().rate;
        }
        let k = seeds.clone().count() as f64;
        table.push([
            mean(runs.iter().map(|r| r.rca_rate)),
            mean(runs.iter().map(|r| r.fixed_rate)),
            active / k,
            flexible / k,
        ]);
    }
    let names = ["rca", "fixed-rotation", "active-array", "flexible-position (stand-in)"];
    let mut ok = true;
    let mut notes = Vec::new();
    for (s, name) in names.iter().enumerate() {
        let col: Vec<f64> = table.iter().map(|row| row[s]).collect();
        let dip = col[..6].windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        let early = col[5] - col[0];
        let late = col[11] - col[5];
        let shape = dip <= 0.05 && early > 0.0 && late < early;
        ok &= shape;
        notes.push(format!("{name} L=1 {:.3} L=6 {:.3} L=12 {:.3} dip {dip:.3}", col[0], col[5], col[11]));
    }
    let dominated = table.iter().all(|row| row[1..].iter().all(|b| row[0] >= *b));
    ok &= dominated;
    verdict(ok, format!("rca >= baselines at every L {dominated}; {}", notes.join("; ")))
}

struct LinearProblem {
    c: Vec<Vec3>,
    cap: SphericalCap,
}

impl Problem for LinearProblem {
    fn num_couplers(&self) -> usize {
        self.c.len()
    }

    fn cap(&self) -> &SphericalCap {
        &self.cap
    }

    fn is_feasible(&self, u: &RotationAxisMatrix) -> rca_core::Result<bool> {
        Ok(u.columns().iter().all(|x| self.cap.contains(x)))
    }

    fn objective(&self, u: &RotationAxisMatrix) -> rca_core::Result<f64> {
        Ok(u.columns().iter().zip(&self.c).map(|(x, c)| c.dot(x.vector())).sum())
    }
}

fn c11_finite_differences(_: &mut Lab) -> Verdict {
    let mut r = rng(11);
    let steps = [1e-2, 1e-3, 1e-4];
    let mut errors = [0.0; 3];
    for _ in 0..20 {
        let problem = LinearProblem {
            c: vec![random_unit(&mut r) * 2.0],
            cap: SphericalCap::new(PI).unwrap(),
        };
        let u = RotationAxisMatrix::new(vec![random_axis(&mut r)]);
        let phi = problem.objective(&u).unwrap();
        let exact = project_tangent(&u.column(0), &problem.c[0]);
        for (e, &eps) in errors.iter_mut().zip(&steps) {
            let params = OptimizerParams {
                eps_fd: eps,
                ..OptimizerParams::default()
            };
            let g = project_tangent(&u.column(0), &fd_gradient(&problem, &u, 0, phi, &params).unwrap());
            *e += (g - exact).norm();
        }
    }
    let xs: Vec<f64> = steps.iter().map(|e| e.log10()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log10()).collect();
    let (mx, my) = (mean(xs.iter().copied()), mean(ys.iter().copied()));
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    verdict(
        (slope - 2.0).abs() <= 0.3,
        format!(
            "log-log slope {slope:.3}; mean errors {:.2e}, {:.2e}, {:.2e}",
            errors[0] / 20.0,
            errors[1] / 20.0,
            errors[2] / 20.0
        ),
    )
}

fn c12_determinism(lab: &mut Lab) -> Verdict {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let seeds = [7, 8];
    let cfg = lab.base.clone();
    let m = run_to_dir(&cfg, Sweep::Power, &seeds, &a, false).unwrap();
    run_to_dir(&cfg, Sweep::Power, &seeds, &b, false).unwrap();
    rerun(&a.join("manifest.json"), &c).unwrap();
    let mut files = m.outputs.clone();
    files.push("manifest.json".into());
    let identical = files.iter().all(|f| {
        let x = fs::read(a.join(f)).unwrap();
        x == fs::read(b.join(f)).unwrap() && x == fs::read(c.join(f)).unwrap()
    });
    let elapsed = start.elapsed();
    verdict(
        identical && elapsed < Duration::from_secs(300),
        format!("{} files byte-identical across two runs and a manifest rerun: {identical}, {:.1} s", files.len(), secs(elapsed)),
    )
}

type Criterion = (u32, &'static str, fn(&mut Lab) -> Verdict);

const CRITERIA: [Criterion; 12] = [
    (1, "self-impedance", c1_self_impedance),
    (2, "mutual-impedance oracle", c2_mutual_oracle),
    (3, "reciprocity", c3_reciprocity),
    (4, "linear-oracle optimality", c4_linear_oracle),
    (5, "segment distance", c5_segment_distance),
    (6, "monotone feasible ascent", c6_monotone_ascent),
    (7, "dominance over fixed rotation", c7_dominance),
    (8, "convergence trend", c8_convergence),
    (9, "coupler count and cap trend", c9_couplers_and_cap),
    (10, "path count trend", c10_paths),
    (11, "finite-difference order", c11_finite_differences),
    (12, "determinism", c12_determinism),
];

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut lab = Lab::new();
    let mut failed = 0;
    for (id, name, check) in CRITERIA {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check(&mut lab);
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name}: {} (wall {:.1} s)", v.detail, secs(start.elapsed()));
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
