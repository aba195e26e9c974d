//! The synthetic participant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ArenaError, Result};
use crate::key;
use crate::models::{lapse_item, ParameterVector};
use crate::rng::stream;
use crate::stimulus::ExperimentDesign;

/// The generating model and its lapse rate ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub params: ParameterVector,
    pub epsilon: f64,
    /// Registered theory the data should be attributed to; defaults to the model family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theory: Option<String>,
}

impl GroundTruth {
    pub fn new(params: ParameterVector, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(ArenaError::InvalidLapse(epsilon));
        }
        params.validate()?;
        Ok(GroundTruth {
            params,
            epsilon,
            theory: None,
        })
    }

    pub fn theory_name(&self) -> String {
        self.theory
            .clone()
            .unwrap_or_else(|| self.params.kind().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCounts {
    pub features: Vec<u8>,
    pub counts: Vec<u32>,
}

/// Observed response counts per test item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseDataset {
    pub design_id: String,
    pub items: Vec<ItemCounts>,
}

impl ResponseDataset {
    pub fn total_trials(&self) -> u64 {
        self.items
            .iter()
            .flat_map(|i| &i.counts)
            .map(|&c| c as u64)
            .sum()
    }
}

/// Samples `trials_per_item` responses per test item from the lapsed truth
/// profile. Item `i` draws from the stream keyed by `(seed, design id, i)`.
pub fn generate_responses(truth: &GroundTruth, design: &ExperimentDesign, seed: u64) -> Result<ResponseDataset> {
    if !(0.0..=1.0).contains(&truth.epsilon) {
        return Err(ArenaError::InvalidLapse(truth.epsilon));
    }
    let profile = truth.params.predict(design)?;
    let items = design
        .test
        .iter()
        .zip(&profile.items)
        .enumerate()
        .map(|(i, (stim, p))| {
            let p = lapse_item(p, truth.epsilon);
            let mut rng = stream(key![seed, "oracle", &design.id, i]);
            let mut counts = vec![0u32; p.len()];
            for _ in 0..design.trials_per_item {
                counts[sample_categorical(&p, rng.random::<f64>())] += 1;
            }
            ItemCounts {
                features: stim.features.clone(),
                counts,
            }
        })
        .collect();
    Ok(ResponseDataset {
        design_id: design.id.clone(),
        items,
    })
}

/// Inverse-CDF draw for a uniform `u` in `[0, 1)`.
pub(crate) fn sample_categorical(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (c, &v) in p.iter().enumerate() {
        acc += v;
        if u < acc {
            return c;
        }
    }
    // rounding left u above the final partial sum; take the last category with mass
    p.iter().rposition(|&v| v > 0.0).unwrap_or(p.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GcmParams, RulexParams};
    use crate::stimulus::shj_fixture;

    #[test]
    fn certain_profile_answers_deterministically() {
        let d = shj_fixture(1).unwrap();
        let truth = GroundTruth::new(ParameterVector::Rulex(RulexParams::new(1.0, 1.0)), 0.0).unwrap();
        let data = generate_responses(&truth, &d, 3).unwrap();
        for (item, t) in data.items.iter().zip(&d.training) {
            assert_eq!(item.counts[t.label], 8);
        }
    }

    #[test]
    fn deterministic_and_conserving() {
        let d = shj_fixture(4).unwrap();
        let truth = GroundTruth::new(ParameterVector::Gcm(GcmParams::uniform(2.0, 3)), 0.1).unwrap();
        let a = generate_responses(&truth, &d, 11).unwrap();
        assert_eq!(a, generate_responses(&truth, &d, 11).unwrap());
        assert!(a.items.iter().all(|i| i.counts.iter().sum::<u32>() == 8));
        assert_ne!(a, generate_responses(&truth, &d, 12).unwrap());
    }

    #[test]
    fn full_lapse_is_uniform_within_three_standard_errors() {
        let mut d = shj_fixture(1).unwrap();
        d.trials_per_item = 10_000;
        let truth = GroundTruth::new(ParameterVector::Rulex(RulexParams::new(1.0, 1.0)), 1.0).unwrap();
        let data = generate_responses(&truth, &d, 5).unwrap();
        let se = (0.25f64 / 10_000.0).sqrt();
        for item in &data.items {
            let f = item.counts[0] as f64 / 10_000.0;
            assert!((f - 0.5).abs() < 3.0 * se, "{f}");
        }
    }

    #[test]
    fn frequencies_converge_to_lapsed_profile() {
        let mut d = shj_fixture(3).unwrap();
        d.trials_per_item = 50_000;
        let params = ParameterVector::Gcm(GcmParams::new(4.0, vec![0.5, 0.3, 0.2]));
        let truth = GroundTruth::new(params.clone(), 0.2).unwrap();
        let expected = crate::models::apply_lapse(&params.predict(&d).unwrap(), 0.2).unwrap();
        let data = generate_responses(&truth, &d, 99).unwrap();
        for (item, p) in data.items.iter().zip(&expected.items) {
            for (&n, &q) in item.counts.iter().zip(p) {
                assert!((n as f64 / 50_000.0 - q).abs() < 0.01);
            }
        }
    }

    #[test]
    fn inverse_cdf_edges() {
        assert_eq!(sample_categorical(&[0.0, 1.0], 0.0), 1);
        assert_eq!(sample_categorical(&[1.0, 0.0], 0.999_999), 0);
        assert_eq!(sample_categorical(&[0.3, 0.7], 0.3), 1);
    }

    #[test]
    fn dataset_json_schema() {
        let data = ResponseDataset {
            design_id: "x".into(),
            items: vec![ItemCounts { features: vec![0, 1], counts: vec![3, 5] }],
        };
        assert_eq!(
            serde_json::to_string(&data).unwrap(),
            r#"{"design_id":"x","items":[{"features":[0,1],"counts":[3,5]}]}"#
        );
    }
}
