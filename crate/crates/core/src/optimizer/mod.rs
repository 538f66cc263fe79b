//! Rotation optimization: cross-entropy initialization over a Fibonacci
//! codebook followed by conditional-gradient refinement.

mod cem;
mod codebook;
mod refine;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cem::{cem_search, CemSample, CemSchedule, CemState};
pub use codebook::{build_codebook, Codebook};
pub use refine::{fd_gradient, linear_oracle, project_tangent, refine};

use crate::beamforming::Scenario;
use crate::error::{RcaError, Result};
use crate::geometry::{RotationAxisMatrix, SphericalCap};

/// Anything the optimizer can maximize over rotation matrices.
pub trait Problem: Sync {
    fn num_couplers(&self) -> usize;

    fn cap(&self) -> &SphericalCap;

    /// Cap membership of every column plus any coupled constraints.
    fn is_feasible(&self, u: &RotationAxisMatrix) -> Result<bool>;

    /// Objective to maximize. Only called on feasible matrices.
    fn objective(&self, u: &RotationAxisMatrix) -> Result<f64>;
}

impl Problem for Scenario {
    fn num_couplers(&self) -> usize {
        Scenario::num_couplers(self)
    }

    fn cap(&self) -> &SphericalCap {
        Scenario::cap(self)
    }

    fn is_feasible(&self, u: &RotationAxisMatrix) -> Result<bool> {
        Scenario::is_feasible(self, u)
    }

    fn objective(&self, u: &RotationAxisMatrix) -> Result<f64> {
        Ok(self.evaluate(u)?.objective)
    }
}

/// Step sizes, tolerances and sampling budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerParams {
    /// Finite-difference step in radians.
    pub eps_fd: f64,
    /// Armijo sufficient-increase parameter.
    pub alpha: f64,
    /// Backtracking shrink factor.
    pub beta: f64,
    pub rho_min: f64,
    /// Maximum refinement iterations.
    pub t_max: usize,
    /// Tolerance on the gap and on the relative objective change.
    pub eps_stop: f64,
    pub codebook_size: usize,
    pub cem_samples: usize,
    pub cem_iterations: usize,
    pub elite_fraction: f64,
    pub smoothing: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            eps_fd: 1e-4,
            alpha: 1e-4,
            beta: 0.5,
            rho_min: 1e-6,
            t_max: 200,
            eps_stop: 1e-6,
            codebook_size: 256,
            cem_samples: 64,
            cem_iterations: 20,
            elite_fraction: 0.2,
            smoothing: 0.7,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        let half_open = |x: f64| x > 0.0 && x <= 1.0;
        let checks = [
            (self.eps_fd > 0.0 && self.eps_fd < 0.5, "eps_fd must lie in (0, 0.5)"),
            (open_unit(self.alpha), "alpha must lie in (0, 1)"),
            (open_unit(self.beta), "beta must lie in (0, 1)"),
            (self.rho_min > 0.0 && self.rho_min < 1.0, "rho_min must lie in (0, 1)"),
            (self.eps_stop >= 0.0 && self.eps_stop.is_finite(), "eps_stop must be nonnegative"),
            (self.codebook_size >= 1, "codebook_size must be at least 1"),
            (half_open(self.elite_fraction), "elite_fraction must lie in (0, 1]"),
            (half_open(self.smoothing), "smoothing must lie in (0, 1]"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(RcaError::config(*msg)),
            None => Ok(()),
        }
    }

    pub fn cem_schedule(&self) -> CemSchedule {
        CemSchedule {
            samples: self.cem_samples,
            iterations: self.cem_iterations,
            elite_fraction: self.elite_fraction,
            smoothing: self.smoothing,
        }
    }
}

/// Why refinement stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    SmallGap,
    SmallChange,
    StepTooSmall,
    MaxIterations,
    NoCouplers,
}

impl StopReason {
    /// Whether the iterate had settled when refinement stopped.
    pub fn converged(self) -> bool {
        self != StopReason::MaxIterations
    }
}

/// One accepted refinement step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Objective after the step.
    pub objective: f64,
    /// Gap at the iterate the step started from.
    pub gap: f64,
    pub step: f64,
    pub feasible: bool,
    /// Accepted iterate.
    pub u: RotationAxisMatrix,
}

/// Full history of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub initial: RotationAxisMatrix,
    pub initial_objective: f64,
    pub records: Vec<IterationRecord>,
    /// Gap at every iterate where one was computed, including the last.
    pub gaps: Vec<f64>,
    pub stop: StopReason,
    pub final_u: RotationAxisMatrix,
    pub final_objective: f64,
    pub wall_time: Duration,
}

impl OptimizationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Objective after initialization and after each accepted step.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective).chain(self.records.iter().map(|r| r.objective)).collect()
    }
}

/// Which candidate seeded refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialPoint {
    Cem,
    Fallback,
}

/// Result of the cross-entropy stage.
#[derive(Debug, Clone)]
pub struct CemOutcome {
    pub codebook: Codebook,
    pub state: CemState,
    /// Best feasible sample; `None` asks for the fixed-axis fallback.
    pub best: Option<(RotationAxisMatrix, f64)>,
}

/// Cross-entropy search over codebook assignments, one codeword per
/// coupler.
pub fn cem_initialize<P: Problem + ?Sized>(problem: &P, params: &OptimizerParams, seed: u64) -> Result<CemOutcome> {
    params.validate()?;
    let codebook = build_codebook(problem.cap(), params.codebook_size)?;
    let to_matrix = |choices: &[usize]| RotationAxisMatrix::new(choices.iter().map(|&i| codebook.get(i)).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let state = cem_search(problem.num_couplers(), codebook.len(), &params.cem_schedule(), &mut rng, |choices| {
        let u = to_matrix(choices);
        if problem.is_feasible(&u)? {
            problem.objective(&u).map(Some)
        } else {
            Ok(None)
        }
    })?;
    let best = state.best().map(|s| (to_matrix(&s.choices), s.objective));
    Ok(CemOutcome { codebook, state, best })
}

/// Outcome of the full pipeline.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub start: InitialPoint,
    pub cem_best_objective: Option<f64>,
    pub trace: OptimizationTrace,
}

impl OptimizationResult {
    pub fn final_u(&self) -> &RotationAxisMatrix {
        &self.trace.final_u
    }
}

/// Cross-entropy initialization, then refinement from the better of the
/// CEM winner and the all-`u₀` fallback (the fallback wins ties).
pub fn optimize<P: Problem + ?Sized>(problem: &P, params: &OptimizerParams, seed: u64) -> Result<OptimizationResult> {
    params.validate()?;
    let n = problem.num_couplers();
    let fallback = RotationAxisMatrix::fixed(n);
    if n == 0 {
        let phi = problem.objective(&fallback)?;
        return Ok(OptimizationResult {
            start: InitialPoint::Fallback,
            cem_best_objective: None,
            trace: OptimizationTrace {
                initial: fallback.clone(),
                initial_objective: phi,
                records: Vec::new(),
                gaps: Vec::new(),
                stop: StopReason::NoCouplers,
                final_u: fallback,
                final_objective: phi,
                wall_time: Duration::ZERO,
            },
        });
    }
    let cem = cem_initialize(problem, params, seed)?;
    let fallback_value = if problem.is_feasible(&fallback)? {
        Some(problem.objective(&fallback)?)
    } else {
        None
    };
    let cem_best_objective = cem.best.as_ref().map(|b| b.1);
    let (start, u0) = match (cem.best, fallback_value) {
        (Some((u, phi)), Some(fb)) if phi > fb => (InitialPoint::Cem, u),
        (_, Some(_)) => (InitialPoint::Fallback, fallback),
        (Some((u, _)), None) => (InitialPoint::Cem, u),
        (None, None) => {
            return Err(RcaError::config(
                "no feasible starting point: the CEM pool is empty and the fixed-axis fallback is infeasible",
            ))
        }
    };
    let trace = refine(problem, &u0, params)?;
    Ok(OptimizationResult {
        start,
        cem_best_objective,
        trace,
    })
}
