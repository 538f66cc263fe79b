//! Cross-entropy search over vectors of categorical choices.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{RcaError, Result};

/// Sampling schedule of a cross-entropy search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CemSchedule {
    pub samples: usize,
    pub iterations: usize,
    pub elite_fraction: f64,
    pub smoothing: f64,
}

/// One feasible sample with its objective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CemSample {
    pub iteration: usize,
    /// Position within its iteration's batch.
    pub index: usize,
    pub choices: Vec<usize>,
    pub objective: f64,
}

/// Per-variable probability vectors and the accumulated feasible pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CemState {
    pub pmfs: Vec<Vec<f64>>,
    pub pool: Vec<CemSample>,
}

impl CemState {
    fn uniform(num_vars: usize, num_choices: usize) -> Self {
        CemState {
            pmfs: vec![vec![1.0 / num_choices as f64; num_choices]; num_vars],
            pool: Vec::new(),
        }
    }

    /// Highest-objective pool member; the earliest one wins ties.
    pub fn best(&self) -> Option<&CemSample> {
        self.pool.iter().fold(None, |best: Option<&CemSample>, s| match best {
            Some(b) if b.objective >= s.objective => Some(b),
            _ => Some(s),
        })
    }
}

/// Runs the search. `evaluate` returns `None` for infeasible choices.
///
/// Every draw of an iteration is taken from `rng` (variable-major within a
/// sample, sample-major within the batch) before any evaluation, so the
/// sample set does not depend on evaluation order.
pub fn cem_search<R, F>(num_vars: usize, num_choices: usize, schedule: &CemSchedule, rng: &mut R, evaluate: F) -> Result<CemState>
where
    R: Rng,
    F: Fn(&[usize]) -> Result<Option<f64>> + Sync,
{
    if num_choices == 0 {
        return Err(RcaError::domain("cross-entropy search needs at least one choice"));
    }
    if !(schedule.elite_fraction > 0.0 && schedule.elite_fraction <= 1.0) || !(schedule.smoothing > 0.0 && schedule.smoothing <= 1.0) {
        return Err(RcaError::domain("elite fraction and smoothing must lie in (0, 1]"));
    }
    let mut state = CemState::uniform(num_vars, num_choices);
    if num_vars == 0 {
        return Ok(state);
    }
    for iteration in 0..schedule.iterations {
        let dists = state
            .pmfs
            .iter()
            .map(|p| WeightedIndex::new(p).map_err(|e| RcaError::domain(format!("invalid probability vector: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let batch: Vec<Vec<usize>> = (0..schedule.samples)
            .map(|_| dists.iter().map(|d| d.sample(rng)).collect())
            .collect();
        let values = batch.par_iter().map(|c| evaluate(c)).collect::<Result<Vec<_>>>()?;

        let mut feasible: Vec<CemSample> = batch
            .into_iter()
            .zip(values)
            .enumerate()
            .filter_map(|(index, (choices, v))| {
                v.map(|objective| CemSample {
                    iteration,
                    index,
                    choices,
                    objective,
                })
            })
            .collect();
        state.pool.extend(feasible.iter().cloned());
        if feasible.is_empty() {
            continue;
        }
        feasible.sort_by(|a, b| b.objective.total_cmp(&a.objective).then(a.index.cmp(&b.index)));
        let elites = ((schedule.elite_fraction * feasible.len() as f64).ceil() as usize).clamp(1, feasible.len());
        let weight = 1.0 / elites as f64;
        for (n, pmf) in state.pmfs.iter_mut().enumerate() {
            let mut freq = vec![0.0; num_choices];
            for s in &feasible[..elites] {
                freq[s.choices[n]] += weight;
            }
            for (p, q) in pmf.iter_mut().zip(freq) {
                *p = (1.0 - schedule.smoothing) * *p + schedule.smoothing * q;
            }
        }
    }
    Ok(state)
}
