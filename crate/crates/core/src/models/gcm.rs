//! Exemplar model: summed exponential similarity to stored training items.

use serde::{Deserialize, Serialize};

use super::{design_categories, PredictiveProfile, NORM_TOL};
use crate::error::{ArenaError, Result};
use crate::stimulus::ExperimentDesign;

pub(crate) const C_MIN: f64 = 1e-6;
pub(crate) const C_MAX: f64 = 20.0;

/// Sensitivity `c` and attention weights over feature dimensions.
///
/// Response scaling is fixed at 1 and category biases are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcmParams {
    pub c: f64,
    pub weights: Vec<f64>,
}

impl GcmParams {
    pub fn new(c: f64, weights: Vec<f64>) -> Self {
        GcmParams { c, weights }
    }

    pub fn uniform(c: f64, dims: usize) -> Self {
        GcmParams {
            c,
            weights: vec![1.0 / dims as f64; dims],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c <= C_MAX) {
            return Err(ArenaError::ParameterOutOfBounds { name: "c", value: self.c });
        }
        if let Some(&w) = self.weights.iter().find(|w| w.is_nan() || **w < 0.0) {
            return Err(ArenaError::ParameterOutOfBounds { name: "weights", value: w });
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(ArenaError::ParameterOutOfBounds { name: "weights", value: total });
        }
        Ok(())
    }

    pub(super) fn predict(&self, design: &ExperimentDesign) -> Result<PredictiveProfile> {
        let dims = design.dims();
        if self.weights.len() != dims {
            return Err(ArenaError::ParameterOutOfBounds {
                name: "weights",
                value: self.weights.len() as f64,
            });
        }
        let k = design_categories(design);
        let items = design
            .test
            .iter()
            .map(|probe| {
                let mut summed = vec![0.0; k];
                for ex in &design.training {
                    let dist: f64 = probe
                        .features
                        .iter()
                        .zip(&ex.stimulus.features)
                        .zip(&self.weights)
                        .map(|((a, b), w)| if a == b { 0.0 } else { *w })
                        .sum();
                    summed[ex.label] += (-self.c * dist).exp();
                }
                let total: f64 = summed.iter().sum();
                summed.iter().map(|s| s / total).collect()
            })
            .collect();
        Ok(PredictiveProfile {
            design_id: design.id.clone(),
            items,
        })
    }
}
