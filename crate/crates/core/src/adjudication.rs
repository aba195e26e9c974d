//! Likelihoods, the joint (theory, particle) Bayes update and recovery verdicts.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{ArenaError, Result};
use crate::models::{ModelKind, ParameterVector, PredictiveProfile, NORM_TOL};
use crate::oracle::ResponseDataset;
use crate::stimulus::ExperimentDesign;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub params: ParameterVector,
    pub weight: f64,
}

/// A named theory and the weighted parameter particles instantiating it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryFamily {
    pub name: String,
    pub kind: ModelKind,
    pub particles: Vec<Particle>,
}

impl TheoryFamily {
    /// Builds a family, taking the model kind from the first particle and
    /// normalizing the weights.
    pub fn new(name: impl Into<String>, mut particles: Vec<Particle>) -> Result<Self> {
        let name = name.into();
        let kind = particles
            .first()
            .map(|p| p.params.kind())
            .ok_or_else(|| ArenaError::DegenerateParticles(name.clone()))?;
        for p in &particles {
            if p.params.kind() != kind {
                return Err(ArenaError::TheoryMismatch {
                    expected: kind.to_string(),
                    found: p.params.kind().to_string(),
                });
            }
            p.params.validate()?;
        }
        let total: f64 = particles.iter().map(|p| p.weight).sum();
        if total.is_nan() || total <= 0.0 || particles.iter().any(|p| p.weight < 0.0) {
            return Err(ArenaError::DegenerateParticles(name));
        }
        for p in &mut particles {
            p.weight /= total;
        }
        Ok(TheoryFamily { name, kind, particles })
    }

    /// Equal weights over the given parameter vectors.
    pub fn uniform(name: impl Into<String>, params: Vec<ParameterVector>) -> Result<Self> {
        let particles = params
            .into_iter()
            .map(|params| Particle { params, weight: 1.0 })
            .collect();
        TheoryFamily::new(name, particles)
    }

    pub fn is_normalized(&self) -> bool {
        (self.particles.iter().map(|p| p.weight).sum::<f64>() - 1.0).abs() <= NORM_TOL
    }
}

/// Belief over registered theories, keyed by theory name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Posterior(pub BTreeMap<String, f64>);

impl Posterior {
    pub fn uniform<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let names: Vec<&str> = names.into_iter().collect();
        let p = 1.0 / names.len() as f64;
        Posterior(names.into_iter().map(|n| (n.to_string(), p)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.0.values().all(|&p| p >= 0.0) && (self.total() - 1.0).abs() <= NORM_TOL
    }

    /// Name and mass of the most probable theory; ties go to the smaller name.
    pub fn argmax(&self) -> Option<(&str, f64)> {
        let mut best: Option<(&str, f64)> = None;
        for (name, &p) in &self.0 {
            if best.is_none_or(|(_, b)| p > b) {
                best = Some((name.as_str(), p));
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .values()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    fn check_covers(&self, theories: &[TheoryFamily]) -> Result<()> {
        for t in theories {
            if !self.0.contains_key(&t.name) {
                return Err(ArenaError::UnknownTheory(t.name.clone()));
            }
        }
        if let Some(extra) = self.0.keys().find(|k| !theories.iter().any(|t| &t.name == *k)) {
            return Err(ArenaError::UnknownTheory(extra.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjudicationVerdict {
    pub winner: String,
    pub margin: f64,
    pub recovered: bool,
}

/// Multinomial log-likelihood of the observed counts under the lapsed
/// profile, without the multinomial coefficients.
pub fn log_likelihood(profile: &PredictiveProfile, data: &ResponseDataset, epsilon: f64) -> Result<f64> {
    if profile.design_id != data.design_id || profile.items.len() != data.items.len() {
        return Err(ArenaError::DesignMismatch {
            expected: data.design_id.clone(),
            found: profile.design_id.clone(),
        });
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(ArenaError::InvalidLapse(epsilon));
    }
    let mut total = 0.0;
    for (p, item) in profile.items.iter().zip(&data.items) {
        if p.len() != item.counts.len() {
            return Err(ArenaError::DesignMismatch {
                expected: data.design_id.clone(),
                found: profile.design_id.clone(),
            });
        }
        let k = p.len() as f64;
        for (&pv, &n) in p.iter().zip(&item.counts) {
            if n > 0 {
                total += n as f64 * ((1.0 - epsilon) * pv + epsilon / k).ln();
            }
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorUpdate {
    pub posterior: Posterior,
    pub theories: Vec<TheoryFamily>,
    /// Every joint mass was zero; the prior and particles were returned unchanged.
    pub degenerate_evidence: bool,
}

/// Per-particle log-likelihoods, one vector per theory.
pub fn particle_log_likelihoods(
    theories: &[TheoryFamily],
    design: &ExperimentDesign,
    data: &ResponseDataset,
    epsilon: f64,
) -> Result<Vec<Vec<f64>>> {
    if design.id != data.design_id {
        return Err(ArenaError::DesignMismatch {
            expected: design.id.clone(),
            found: data.design_id.clone(),
        });
    }
    theories
        .iter()
        .map(|t| {
            t.particles
                .iter()
                .map(|p| log_likelihood(&p.params.predict(design)?, data, epsilon))
                .collect()
        })
        .collect()
}

/// Joint Bayes over (theory, particle) pairs, computed in log space.
pub fn update_posterior(
    prior: &Posterior,
    theories: &[TheoryFamily],
    design: &ExperimentDesign,
    data: &ResponseDataset,
    epsilon: f64,
) -> Result<PosteriorUpdate> {
    prior.check_covers(theories)?;
    let lls = particle_log_likelihoods(theories, design, data, epsilon)?;
    Ok(update_with_log_likelihoods(prior, theories, &lls))
}

/// The Bayes step given precomputed per-particle log-likelihoods.
pub fn update_with_log_likelihoods(prior: &Posterior, theories: &[TheoryFamily], lls: &[Vec<f64>]) -> PosteriorUpdate {
    let log_mass: Vec<Vec<f64>> = theories
        .iter()
        .zip(lls)
        .map(|(t, ll)| {
            let lp = prior.get(&t.name).unwrap_or(0.0).ln();
            t.particles
                .iter()
                .zip(ll)
                .map(|(p, &l)| lp + p.weight.ln() + l)
                .collect()
        })
        .collect();
    let top = log_mass
        .iter()
        .flatten()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return PosteriorUpdate {
            posterior: prior.clone(),
            theories: theories.to_vec(),
            degenerate_evidence: true,
        };
    }
    let mass: Vec<Vec<f64>> = log_mass
        .iter()
        .map(|row| row.iter().map(|&l| (l - top).exp()).collect())
        .collect();
    let row_sums: Vec<f64> = mass.iter().map(|row| row.iter().sum()).collect();
    let z: f64 = row_sums.iter().sum();

    let posterior = Posterior(
        theories
            .iter()
            .zip(&row_sums)
            .map(|(t, &s)| (t.name.clone(), s / z))
            .collect(),
    );
    let theories = theories
        .iter()
        .zip(mass.iter().zip(&row_sums))
        .map(|(t, (row, &s))| {
            let mut t = t.clone();
            if s > 0.0 {
                for (p, &m) in t.particles.iter_mut().zip(row) {
                    p.weight = m / s;
                }
            }
            t
        })
        .collect();
    PosteriorUpdate {
        posterior,
        theories,
        degenerate_evidence: false,
    }
}

/// Signed margin of the declared truth over its strongest rival.
pub fn verdict(posterior: &Posterior, truth: &str) -> Result<AdjudicationVerdict> {
    let p_truth = posterior
        .get(truth)
        .ok_or_else(|| ArenaError::UnknownTheory(truth.to_string()))?;
    let best_rival = posterior
        .0
        .iter()
        .filter(|(n, _)| n.as_str() != truth)
        .map(|(_, &p)| p)
        .fold(0.0, f64::max);
    let (winner, _) = posterior.argmax().expect("truth is registered");
    let margin = p_truth - best_rival;
    Ok(AdjudicationVerdict {
        winner: winner.to_string(),
        margin,
        recovered: margin > 0.0,
    })
}
