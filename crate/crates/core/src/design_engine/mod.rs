//! Divergence maps over the candidate pool and EIG-based experiment selection.

mod divergence;
mod eig;

use rayon::prelude::*;

use crate::adjudication::{Posterior, TheoryFamily};
use crate::error::{ArenaError, Result};
use crate::models::{theory_predict, PredictiveProfile};
use crate::stimulus::ExperimentDesign;

pub use divergence::{
    divergence_map, divergence_map_from_profiles, jensen_shannon, profile_divergence, DivergenceEntry, DivergenceMap,
    PairSummary, DEFAULT_TOP_N,
};
pub use eig::{eig_from_profiles, expected_information_gain, outcome_space_size, EigEstimate, EigMethod, EigSettings};

/// Mixture profiles of every theory on every design, in pool × theory order.
pub fn pool_profiles(theories: &[TheoryFamily], pool: &[ExperimentDesign]) -> Result<Vec<Vec<PredictiveProfile>>> {
    pool.par_iter()
        .map(|d| theories.iter().map(|t| theory_predict(t, d)).collect())
        .collect()
}

/// EIG of every design in the pool, in pool order.
pub fn score_pool(
    pool: &[ExperimentDesign],
    profiles: &[Vec<PredictiveProfile>],
    prior: &[f64],
    epsilon: f64,
    settings: &EigSettings,
) -> Vec<EigEstimate> {
    pool.par_iter()
        .zip(profiles.par_iter())
        .map(|(d, p)| eig_from_profiles(prior, p, d, epsilon, settings))
        .collect()
}

/// Index of the highest-EIG design; ties go to the lexicographically smaller id.
pub fn argmax_eig(pool: &[ExperimentDesign], scores: &[EigEstimate]) -> Result<usize> {
    (0..pool.len())
        .reduce(|best, i| {
            let (a, b) = (scores[i].value, scores[best].value);
            if a > b || (a == b && pool[i].id < pool[best].id) {
                i
            } else {
                best
            }
        })
        .ok_or(ArenaError::EmptyPool)
}

/// Picks the most informative design. The caller removes it from the pool.
pub fn select_experiment(
    pool: &[ExperimentDesign],
    prior: &Posterior,
    theories: &[TheoryFamily],
    epsilon: f64,
    settings: &EigSettings,
) -> Result<(ExperimentDesign, EigEstimate)> {
    if pool.is_empty() {
        return Err(ArenaError::EmptyPool);
    }
    let profiles = pool_profiles(theories, pool)?;
    let weights: Vec<f64> = theories
        .iter()
        .map(|t| prior.get(&t.name).unwrap_or(0.0))
        .collect();
    let scores = score_pool(pool, &profiles, &weights, epsilon, settings);
    let best = argmax_eig(pool, &scores)?;
    Ok((pool[best].clone(), scores[best].clone()))
}
