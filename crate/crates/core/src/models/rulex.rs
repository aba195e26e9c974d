//! Rule-plus-exception model, deterministic variant.
//!
//! Every single-dimension rule is scored by training accuracy. The best
//! rules keep their misclassified training items as exact-match exceptions,
//! and the predictions of all tied best rules are averaged.

use serde::{Deserialize, Serialize};

use super::{design_categories, peaked, PredictiveProfile};
use crate::error::{ArenaError, Result};
use crate::stimulus::{ExperimentDesign, Stimulus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulexParams {
    /// Probability of responding with the rule's label.
    pub rule_adherence: f64,
    /// Probability of responding with a retrieved exception's label.
    pub exception_retrieval: f64,
}

impl RulexParams {
    pub fn new(rule_adherence: f64, exception_retrieval: f64) -> Self {
        RulexParams {
            rule_adherence,
            exception_retrieval,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rule_adherence", self.rule_adherence),
            ("exception_retrieval", self.exception_retrieval),
        ] {
            if !(0.5..=1.0).contains(&v) {
                return Err(ArenaError::ParameterOutOfBounds { name, value: v });
            }
        }
        Ok(())
    }

    pub(super) fn predict(&self, design: &ExperimentDesign) -> PredictiveProfile {
        let k = design_categories(design);
        let rules = best_rules(design, k);
        let items = design
            .test
            .iter()
            .map(|probe| {
                let mut acc = vec![0.0; k];
                for rule in &rules {
                    let p = match rule.exceptions.iter().find(|(s, _)| s == probe) {
                        Some((_, label)) => peaked(*label, self.exception_retrieval, k),
                        None => peaked(rule.classify(probe), self.rule_adherence, k),
                    };
                    for (a, v) in acc.iter_mut().zip(p) {
                        *a += v;
                    }
                }
                let n = rules.len() as f64;
                acc.iter().map(|a| a / n).collect()
            })
            .collect();
        PredictiveProfile {
            design_id: design.id.clone(),
            items,
        }
    }
}

/// "Category 0 iff feature `dim` equals `value`"; items failing the test get `other`.
#[derive(Debug, Clone)]
struct Rule {
    dim: usize,
    value: u8,
    other: usize,
    exceptions: Vec<(Stimulus, usize)>,
}

impl Rule {
    fn classify(&self, s: &Stimulus) -> usize {
        if s.features[self.dim] == self.value {
            0
        } else {
            self.other
        }
    }
}

fn best_rules(design: &ExperimentDesign, k: usize) -> Vec<Rule> {
    let dims = design.dims();
    let mut scored = Vec::with_capacity(2 * dims);
    for dim in 0..dims {
        for value in 0..=1u8 {
            // With two categories the complement is always category 1; with more,
            // it is the most frequent non-zero label among non-matching items.
            let mut counts = vec![0usize; k];
            for t in &design.training {
                if t.stimulus.features[dim] != value && t.label != 0 {
                    counts[t.label] += 1;
                }
            }
            let other = (1..k).fold(1, |best, c| if counts[c] > counts[best] { c } else { best });
            let mut rule = Rule {
                dim,
                value,
                other,
                exceptions: Vec::new(),
            };
            let mut correct = 0usize;
            for t in &design.training {
                if rule.classify(&t.stimulus) == t.label {
                    correct += 1;
                } else {
                    rule.exceptions.push((t.stimulus.clone(), t.label));
                }
            }
            scored.push((correct, rule));
        }
    }
    let top = scored.iter().map(|(c, _)| *c).max().unwrap_or(0);
    scored
        .into_iter()
        .filter(|(c, _)| *c == top)
        .map(|(_, r)| r)
        .collect()
}
