//! The three theory families behind one parameter/profile interface.

mod gcm;
mod rulex;
mod sustain;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::adjudication::TheoryFamily;
use crate::error::{ArenaError, Result};
use crate::stimulus::ExperimentDesign;

pub use gcm::GcmParams;
pub use rulex::RulexParams;
pub use sustain::SustainParams;

/// Tolerance for probability vectors and weight simplices.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "GCM")]
    Gcm,
    #[serde(rename = "RULEX")]
    Rulex,
    #[serde(rename = "SUSTAIN")]
    Sustain,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Gcm, ModelKind::Rulex, ModelKind::Sustain];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gcm => "GCM",
            ModelKind::Rulex => "RULEX",
            ModelKind::Sustain => "SUSTAIN",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GCM" => Ok(ModelKind::Gcm),
            "RULEX" => Ok(ModelKind::Rulex),
            "SUSTAIN" => Ok(ModelKind::Sustain),
            _ => Err(ArenaError::UnknownTheory(s.to_string())),
        }
    }
}

/// A concrete parameterization of one of the model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model")]
pub enum ParameterVector {
    #[serde(rename = "GCM")]
    Gcm(GcmParams),
    #[serde(rename = "RULEX")]
    Rulex(RulexParams),
    #[serde(rename = "SUSTAIN")]
    Sustain(SustainParams),
}

impl ParameterVector {
    pub fn kind(&self) -> ModelKind {
        match self {
            ParameterVector::Gcm(_) => ModelKind::Gcm,
            ParameterVector::Rulex(_) => ModelKind::Rulex,
            ParameterVector::Sustain(_) => ModelKind::Sustain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ParameterVector::Gcm(p) => p.validate(),
            ParameterVector::Rulex(p) => p.validate(),
            ParameterVector::Sustain(p) => p.validate(),
        }
    }

    pub fn predict(&self, design: &ExperimentDesign) -> Result<PredictiveProfile> {
        match self {
            ParameterVector::Gcm(p) => p.predict(design),
            ParameterVector::Rulex(p) => Ok(p.predict(design)),
            ParameterVector::Sustain(p) => Ok(p.predict(design)),
        }
    }

    /// Multiplies every continuous parameter by `exp(noise())` and clamps the
    /// result back into bounds. GCM attention weights are renormalized.
    pub fn perturbed(&self, mut noise: impl FnMut() -> f64) -> ParameterVector {
        let mut scale = |v: f64, lo: f64, hi: f64| (v * noise().exp()).clamp(lo, hi);
        match self {
            ParameterVector::Gcm(p) => {
                let c = scale(p.c, gcm::C_MIN, gcm::C_MAX);
                let mut weights: Vec<f64> = p.weights.iter().map(|&w| scale(w, 0.0, 1.0)).collect();
                let total: f64 = weights.iter().sum();
                if total > 0.0 {
                    weights.iter_mut().for_each(|w| *w /= total);
                } else {
                    weights = p.weights.clone();
                }
                ParameterVector::Gcm(GcmParams { c, weights })
            }
            ParameterVector::Rulex(p) => ParameterVector::Rulex(RulexParams {
                rule_adherence: scale(p.rule_adherence, 0.5, 1.0),
                exception_retrieval: scale(p.exception_retrieval, 0.5, 1.0),
            }),
            ParameterVector::Sustain(p) => ParameterVector::Sustain(SustainParams {
                focus: scale(p.focus, 0.0, sustain::FOCUS_MAX),
                competition: scale(p.competition, 0.0, sustain::COMPETITION_MAX),
                consistency: scale(p.consistency, sustain::CONSISTENCY_MIN, sustain::CONSISTENCY_MAX),
                learning_rate: scale(p.learning_rate, sustain::LEARNING_RATE_MIN, 1.0),
            }),
        }
    }
}

/// Predicted response distribution over categories for each test item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveProfile {
    pub design_id: String,
    pub items: Vec<Vec<f64>>,
}

impl PredictiveProfile {
    pub fn categories(&self) -> usize {
        self.items.first().map(Vec::len).unwrap_or(0)
    }

    pub fn is_normalized(&self) -> bool {
        self.items.iter().all(|p| {
            p.iter().all(|&v| v >= 0.0 && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= NORM_TOL
        })
    }
}

fn check_kind(expected: ModelKind, params: &ParameterVector) -> Result<()> {
    if params.kind() != expected {
        return Err(ArenaError::TheoryMismatch {
            expected: expected.to_string(),
            found: params.kind().to_string(),
        });
    }
    Ok(())
}

pub fn gcm_predict(params: &ParameterVector, design: &ExperimentDesign) -> Result<PredictiveProfile> {
    check_kind(ModelKind::Gcm, params)?;
    params.predict(design)
}

pub fn rulex_predict(params: &ParameterVector, design: &ExperimentDesign) -> Result<PredictiveProfile> {
    check_kind(ModelKind::Rulex, params)?;
    params.predict(design)
}

pub fn sustain_train_predict(params: &ParameterVector, design: &ExperimentDesign) -> Result<PredictiveProfile> {
    check_kind(ModelKind::Sustain, params)?;
    params.predict(design)
}

/// Mixes each item's distribution with the uniform one: `(1-ε)p + ε/K`.
pub fn apply_lapse(profile: &PredictiveProfile, epsilon: f64) -> Result<PredictiveProfile> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(ArenaError::InvalidLapse(epsilon));
    }
    Ok(PredictiveProfile {
        design_id: profile.design_id.clone(),
        items: profile.items.iter().map(|p| lapse_item(p, epsilon)).collect(),
    })
}

pub(crate) fn lapse_item(p: &[f64], epsilon: f64) -> Vec<f64> {
    let uniform = epsilon / p.len() as f64;
    p.iter().map(|&v| (1.0 - epsilon) * v + uniform).collect()
}

/// Particle-weighted mixture of the family's model predictions.
pub fn theory_predict(theory: &TheoryFamily, design: &ExperimentDesign) -> Result<PredictiveProfile> {
    let total: f64 = theory.particles.iter().map(|p| p.weight.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(ArenaError::DegenerateParticles(theory.name.clone()));
    }
    let mut mix: Option<Vec<Vec<f64>>> = None;
    for particle in &theory.particles {
        if particle.weight <= 0.0 {
            continue;
        }
        if particle.params.kind() != theory.kind {
            return Err(ArenaError::TheoryMismatch {
                expected: theory.kind.to_string(),
                found: particle.params.kind().to_string(),
            });
        }
        let w = particle.weight / total;
        let profile = particle.params.predict(design)?;
        let acc = mix.get_or_insert_with(|| {
            profile
                .items
                .iter()
                .map(|p| vec![0.0; p.len()])
                .collect()
        });
        for (a, p) in acc.iter_mut().zip(&profile.items) {
            for (av, pv) in a.iter_mut().zip(p) {
                *av += w * pv;
            }
        }
    }
    Ok(PredictiveProfile {
        design_id: design.id.clone(),
        items: mix.unwrap_or_default(),
    })
}

/// Number of categories implied by a (valid) design's training labels.
pub(crate) fn design_categories(design: &ExperimentDesign) -> usize {
    design
        .training
        .iter()
        .map(|t| t.label + 1)
        .max()
        .unwrap_or(2)
        .max(2)
}

/// Spreads `1 - mass` uniformly over every category except `label`.
pub(crate) fn peaked(label: usize, mass: f64, k: usize) -> Vec<f64> {
    let rest = (1.0 - mass) / (k - 1) as f64;
    (0..k).map(|c| if c == label { mass } else { rest }).collect()
}
