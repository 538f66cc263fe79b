//! Conditional-gradient refinement on a product of spherical caps.

use std::time::Instant;

use rayon::prelude::*;

use super::{IterationRecord, OptimizationTrace, OptimizerParams, Problem, StopReason};
use crate::error::{RcaError, Result};
use crate::geometry::{tangent_basis, RotationAxisMatrix, SphericalCap, UnitAxis, Vec3};

/// Finite-difference estimate of the gradient of the objective with respect
/// to column `n`, expressed in the tangent basis at that column.
///
/// Each basis direction uses a central difference when both retracted trial
/// matrices are feasible, a one-sided difference when only one is, and zero
/// otherwise. `phi` is the objective at `u`.
pub fn fd_gradient<P: Problem + ?Sized>(problem: &P, u: &RotationAxisMatrix, n: usize, phi: f64, params: &OptimizerParams) -> Result<Vec3> {
    let trials = trial_matrices(problem.cap(), u, n, params.eps_fd);
    let values = trials
        .par_iter()
        .map(|t| evaluate_if_feasible(problem, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(combine_differences(u.column(n), &values, phi, params.eps_fd))
}

/// Trials `[+b₁, -b₁, +b₂, -b₂]` for column `n`.
fn trial_matrices(cap: &SphericalCap, u: &RotationAxisMatrix, n: usize, eps: f64) -> Vec<RotationAxisMatrix> {
    let un = u.column(n);
    let (b1, b2) = tangent_basis(&un);
    [b1, b2]
        .iter()
        .flat_map(|b| [1.0, -1.0].map(|sign| u.with_column(n, cap.retract(&(un.vector() + b.vector() * (sign * eps))))))
        .collect()
}

fn evaluate_if_feasible<P: Problem + ?Sized>(problem: &P, u: &RotationAxisMatrix) -> Result<Option<f64>> {
    if problem.is_feasible(u)? {
        problem.objective(u).map(Some)
    } else {
        Ok(None)
    }
}

fn combine_differences(un: UnitAxis, values: &[Option<f64>], phi: f64, eps: f64) -> Vec3 {
    let (b1, b2) = tangent_basis(&un);
    let slope = |plus: Option<f64>, minus: Option<f64>| match (plus, minus) {
        (Some(p), Some(m)) => (p - m) / (2.0 * eps),
        (Some(p), None) => (p - phi) / eps,
        (None, Some(m)) => (phi - m) / eps,
        (None, None) => 0.0,
    };
    b1.vector() * slope(values[0], values[1]) + b2.vector() * slope(values[2], values[3])
}

/// `(I - uuᵀ) g`.
pub fn project_tangent(u: &UnitAxis, g: &Vec3) -> Vec3 {
    g - u.vector() * u.vector().dot(g)
}

/// Maximizer of `qᵀx` over the cap; `u_current` when `q = 0`.
pub fn linear_oracle(q: &Vec3, u_current: &UnitAxis, cap: &SphericalCap) -> UnitAxis {
    if q.norm() == 0.0 {
        return *u_current;
    }
    cap.retract(q)
}

/// Projected gradients of every column, evaluated as one batch of `4N`
/// trials.
fn projected_gradients<P: Problem + ?Sized>(problem: &P, u: &RotationAxisMatrix, phi: f64, params: &OptimizerParams) -> Result<Vec<Vec3>> {
    let n = u.len();
    let trials: Vec<RotationAxisMatrix> = (0..n).flat_map(|c| trial_matrices(problem.cap(), u, c, params.eps_fd)).collect();
    let values = trials
        .par_iter()
        .map(|t| evaluate_if_feasible(problem, t))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|c| {
            let un = u.column(c);
            let g = combine_differences(un, &values[4 * c..4 * c + 4], phi, params.eps_fd);
            project_tangent(&un, &g)
        })
        .collect())
}

/// Conditional-gradient ascent from a feasible `u0` with feasibility-aware
/// Armijo backtracking.
pub fn refine<P: Problem + ?Sized>(problem: &P, u0: &RotationAxisMatrix, params: &OptimizerParams) -> Result<OptimizationTrace> {
    params.validate()?;
    if u0.len() != problem.num_couplers() {
        return Err(RcaError::domain(format!("initial point has {} columns for {} couplers", u0.len(), problem.num_couplers())));
    }
    if !problem.is_feasible(u0)? {
        return Err(RcaError::domain("refinement must start from a feasible rotation matrix"));
    }
    let start = Instant::now();
    let cap = *problem.cap();
    let mut u = u0.clone();
    let mut phi = problem.objective(&u)?;
    let initial_objective = phi;
    let mut records = Vec::new();
    let mut gaps = Vec::new();

    let stop = loop {
        if records.len() >= params.t_max {
            break StopReason::MaxIterations;
        }
        let q = projected_gradients(problem, &u, phi, params)?;
        let targets: Vec<UnitAxis> = q.iter().zip(u.columns()).map(|(q, un)| linear_oracle(q, un, &cap)).collect();
        let gap: f64 = q
            .iter()
            .zip(targets.iter().zip(u.columns()))
            .map(|(q, (s, un))| q.dot(&(s.vector() - un.vector())))
            .sum();
        gaps.push(gap);
        if gap <= params.eps_stop {
            break StopReason::SmallGap;
        }

        let mut rho = 1.0;
        let accepted = loop {
            let candidate = RotationAxisMatrix::new(
                u.columns()
                    .iter()
                    .zip(&targets)
                    .map(|(un, s)| cap.retract(&(un.vector() + (s.vector() - un.vector()) * rho)))
                    .collect(),
            );
            if problem.is_feasible(&candidate)? {
                let value = problem.objective(&candidate)?;
                if value >= phi + params.alpha * rho * gap {
                    break Some((candidate, value));
                }
            }
            rho *= params.beta;
            if rho < params.rho_min {
                break None;
            }
        };
        let Some((candidate, value)) = accepted else {
            break StopReason::StepTooSmall;
        };
        let change = (value - phi).abs() / phi.abs().max(1.0);
        records.push(IterationRecord {
            iteration: records.len() + 1,
            objective: value,
            gap,
            step: rho,
            feasible: true,
            u: candidate.clone(),
        });
        u = candidate;
        phi = value;
        if change <= params.eps_stop {
            break StopReason::SmallChange;
        }
    };

    Ok(OptimizationTrace {
        initial: u0.clone(),
        initial_objective,
        records,
        gaps,
        stop,
        final_u: u,
        final_objective: phi,
        wall_time: start.elapsed(),
    })
}
