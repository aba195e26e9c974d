//! Supervised adaptive clustering model.
//!
//! Clusters live in feature space and carry output weights per category.
//! Training runs `trials_per_item` epochs over the training items in
//! canonical (feature-lexicographic) order. A cluster is recruited on the
//! current item whenever the most activated cluster fails to predict the
//! correct label. Only the winning cluster learns.
//!
//! For binary features the one-hot position of a cluster on a dimension
//! collapses to a single coordinate `p` in `[0, 1]` (weight on value 1), and
//! the half city-block distance to a stimulus value `x` is `|x - p|`.

use serde::{Deserialize, Serialize};

use super::{design_categories, PredictiveProfile};
use crate::error::{ArenaError, Result};
use crate::stimulus::ExperimentDesign;

pub(crate) const FOCUS_MAX: f64 = 20.0;
pub(crate) const COMPETITION_MAX: f64 = 20.0;
pub(crate) const CONSISTENCY_MIN: f64 = 1e-6;
pub(crate) const CONSISTENCY_MAX: f64 = 20.0;
pub(crate) const LEARNING_RATE_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SustainParams {
    /// Attention focus `r`.
    pub focus: f64,
    /// Cluster competition `β`.
    pub competition: f64,
    /// Decision consistency `d`.
    pub consistency: f64,
    /// Learning rate `η`.
    pub learning_rate: f64,
}

#[derive(Debug, Clone)]
struct Cluster {
    position: Vec<f64>,
    outputs: Vec<f64>,
}

struct Network<'a> {
    params: &'a SustainParams,
    lambda: Vec<f64>,
    clusters: Vec<Cluster>,
    k: usize,
}

struct Response {
    winner: usize,
    /// Per-dimension distance of the winner to the input.
    distance: Vec<f64>,
    /// Winner output after competition.
    h_out: f64,
    outputs: Vec<f64>,
}

impl SustainParams {
    pub fn new(focus: f64, competition: f64, consistency: f64, learning_rate: f64) -> Self {
        SustainParams {
            focus,
            competition,
            consistency,
            learning_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("focus", self.focus, (0.0..=FOCUS_MAX).contains(&self.focus)),
            (
                "competition",
                self.competition,
                (0.0..=COMPETITION_MAX).contains(&self.competition),
            ),
            (
                "consistency",
                self.consistency,
                self.consistency > 0.0 && self.consistency <= CONSISTENCY_MAX,
            ),
            (
                "learning_rate",
                self.learning_rate,
                self.learning_rate > 0.0 && self.learning_rate <= 1.0,
            ),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(ArenaError::ParameterOutOfBounds { name, value });
            }
        }
        Ok(())
    }

    pub(super) fn predict(&self, design: &ExperimentDesign) -> PredictiveProfile {
        let net = self.train(design);
        let items = design
            .test
            .iter()
            .map(|probe| {
                let x: Vec<f64> = probe.features.iter().map(|&f| f as f64).collect();
                match net.respond(&x) {
                    Some(r) => softmax(&r.outputs, self.consistency),
                    None => vec![1.0 / net.k as f64; net.k],
                }
            })
            .collect();
        PredictiveProfile {
            design_id: design.id.clone(),
            items,
        }
    }

    fn train(&self, design: &ExperimentDesign) -> Network<'_> {
        let mut net = Network {
            params: self,
            lambda: vec![1.0; design.dims()],
            clusters: Vec::new(),
            k: design_categories(design),
        };
        let order = design.canonical_training();
        for _ in 0..design.trials_per_item {
            for item in &order {
                let x: Vec<f64> = item.stimulus.features.iter().map(|&f| f as f64).collect();
                net.learn(&x, item.label);
            }
        }
        net
    }

    /// Clusters recruited after training on `design`.
    pub fn cluster_count(&self, design: &ExperimentDesign) -> usize {
        self.train(design).clusters.len()
    }
}

impl Network<'_> {
    fn activation(&self, cluster: &Cluster, x: &[f64]) -> (f64, Vec<f64>) {
        let r = self.params.focus;
        let mut num = 0.0;
        let mut den = 0.0;
        let mut dist = Vec::with_capacity(x.len());
        for ((&xi, &pi), &lam) in x.iter().zip(&cluster.position).zip(&self.lambda) {
            let mu = (xi - pi).abs();
            let lr = lam.powf(r);
            num += lr * (-lam * mu).exp();
            den += lr;
            dist.push(mu);
        }
        let act = if den > 0.0 { num / den } else { 0.0 };
        (act, dist)
    }

    fn respond(&self, x: &[f64]) -> Option<Response> {
        self.respond_with(x, None)
    }

    /// Winner-take-all response; `forced` pins the winner (a freshly recruited cluster).
    fn respond_with(&self, x: &[f64], forced: Option<usize>) -> Option<Response> {
        if self.clusters.is_empty() {
            return None;
        }
        let acts: Vec<(f64, Vec<f64>)> = self.clusters.iter().map(|c| self.activation(c, x)).collect();
        let winner = forced.unwrap_or_else(|| {
            acts.iter()
                .enumerate()
                .fold(0, |best, (j, (a, _))| if *a > acts[best].0 { j } else { best })
        });
        let top = acts[winner].0;
        // (a_w^β / Σ a_j^β) a_w, evaluated as ratios to stay in range for large β
        let beta = self.params.competition;
        let h_out = if top > 0.0 {
            let denom: f64 = acts.iter().map(|(a, _)| (a / top).powf(beta)).sum();
            top / denom
        } else {
            0.0
        };
        let outputs = self.clusters[winner].outputs.iter().map(|w| w * h_out).collect();
        Some(Response {
            winner,
            distance: acts[winner].1.clone(),
            h_out,
            outputs,
        })
    }

    fn learn(&mut self, x: &[f64], label: usize) {
        let eta = self.params.learning_rate;
        let mut resp = self.respond(x);
        let correct = resp.as_ref().is_some_and(|r| {
            r.outputs
                .iter()
                .enumerate()
                .all(|(c, &v)| c == label || r.outputs[label] > v)
        });
        if !correct {
            self.clusters.push(Cluster {
                position: x.to_vec(),
                outputs: vec![0.0; self.k],
            });
            resp = self.respond_with(x, Some(self.clusters.len() - 1));
        }
        let resp = resp.expect("at least one cluster after recruitment");

        for (lam, &mu) in self.lambda.iter_mut().zip(&resp.distance) {
            *lam = (*lam + eta * (-*lam * mu).exp() * (1.0 - *lam * mu)).max(0.0);
        }
        let win = &mut self.clusters[resp.winner];
        for (p, &xi) in win.position.iter_mut().zip(x) {
            *p += eta * (xi - *p);
        }
        // humble teacher: outputs beyond the target direction are not penalized
        for (c, w) in win.outputs.iter_mut().enumerate() {
            let out = resp.outputs[c];
            let target = if c == label { out.max(1.0) } else { out.min(0.0) };
            *w += eta * (target - out) * resp.h_out;
        }
    }
}

fn softmax(outputs: &[f64], consistency: f64) -> Vec<f64> {
    let top = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = outputs.iter().map(|&o| (consistency * (o - top)).exp()).collect();
    let total: f64 = e.iter().sum();
    e.iter().map(|v| v / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::{shj_fixture, Stimulus, TrainingItem};

    fn design(training: Vec<(Vec<u8>, usize)>, test: Vec<Vec<u8>>) -> ExperimentDesign {
        ExperimentDesign {
            id: "s".into(),
            proposer: "t".into(),
            training: training
                .into_iter()
                .map(|(f, label)| TrainingItem { stimulus: Stimulus::new(f), label })
                .collect(),
            test: test.into_iter().map(Stimulus::new).collect(),
            trials_per_item: 8,
        }
    }

    #[test]
    fn single_item_is_learned() {
        // one cluster with activation 1; C_A after n updates is 1-(1-η)^n, C_B stays 0
        let d = design(vec![(vec![0, 0, 0], 0)], vec![vec![0, 0, 0]]);
        let p = SustainParams::new(6.0, 4.0, 20.0, 0.5);
        let prof = p.predict(&d);
        let ca = 1.0 - 0.5f64.powi(8);
        let expected = 1.0 / (1.0 + (-20.0 * ca).exp());
        assert!((prof.items[0][0] - expected).abs() < 1e-12);
        assert!(prof.items[0][0] >= 0.99);
    }

    #[test]
    fn opposite_items_recruit_two_clusters() {
        let d = design(
            vec![(vec![0, 0, 0], 0), (vec![1, 1, 1], 1)],
            vec![vec![0, 0, 0], vec![1, 1, 1]],
        );
        for eta in [0.05, 0.1, 0.5, 1.0] {
            let p = SustainParams::new(6.0, 4.0, 8.0, eta);
            assert_eq!(p.cluster_count(&d), 2, "eta {eta}");
        }
    }

    #[test]
    fn zero_consistency_limit_is_uniform() {
        let d = shj_fixture(2).unwrap();
        let p = SustainParams::new(6.0, 4.0, 1e-12, 0.1);
        for item in p.predict(&d).items {
            assert!((item[0] - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn type_one_needs_fewer_clusters_than_type_six() {
        let p = SustainParams::new(6.0, 4.0, 8.0, 0.1);
        let one = p.cluster_count(&shj_fixture(1).unwrap());
        let six = p.cluster_count(&shj_fixture(6).unwrap());
        assert!(one < six, "{one} vs {six}");
        assert_eq!(six, 8);
    }

    #[test]
    fn huge_competition_stays_finite() {
        let d = shj_fixture(6).unwrap();
        let p = SustainParams::new(20.0, 20.0, 20.0, 1.0);
        assert!(p.predict(&d).is_normalized());
    }

    #[test]
    fn bounds() {
        assert!(SustainParams::new(-1.0, 1.0, 1.0, 0.1).validate().is_err());
        assert!(SustainParams::new(1.0, 21.0, 1.0, 0.1).validate().is_err());
        assert!(SustainParams::new(1.0, 1.0, 0.0, 0.1).validate().is_err());
        assert!(SustainParams::new(1.0, 1.0, 1.0, 1.5).validate().is_err());
        assert!(SustainParams::new(0.0, 0.0, 20.0, 1.0).validate().is_ok());
    }
}
