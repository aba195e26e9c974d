#![allow(dead_code)]

use proptest::prelude::*;
use theory_arena::models::{GcmParams, ParameterVector, RulexParams, SustainParams};
use theory_arena::stimulus::{validate_design, ExperimentDesign, Stimulus, StimulusSpace, TrainingItem};

pub fn space(dims: usize) -> StimulusSpace {
    StimulusSpace {
        dims,
        categories: 2,
        max_train_items: 1 << dims,
        max_test_items: 1 << dims,
        trials_per_test_item: 8,
    }
}

/// Valid two-category designs over 2 to 4 binary dimensions.
pub fn design() -> impl Strategy<Value = ExperimentDesign> {
    (2usize..=4)
        .prop_flat_map(|dims| {
            let n = 1usize << dims;
            (Just(dims), proptest::collection::vec(proptest::option::of(0usize..2), n), 1u32..=8)
        })
        .prop_filter_map("needs both categories", |(dims, labels, trials)| {
            let training: Vec<TrainingItem> = labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| {
                    l.map(|label| TrainingItem {
                        stimulus: Stimulus::from_index(i, dims),
                        label,
                    })
                })
                .collect();
            let d = ExperimentDesign {
                id: "prop".into(),
                proposer: "proptest".into(),
                training,
                test: space(dims).default_test_items(),
                trials_per_item: trials,
            };
            validate_design(&d, &space(dims)).valid.then_some(d)
        })
}

pub fn gcm(dims: usize) -> impl Strategy<Value = ParameterVector> {
    (0.05f64..20.0, proptest::collection::vec(0.01f64..1.0, dims)).prop_map(|(c, w)| {
        let t: f64 = w.iter().sum();
        ParameterVector::Gcm(GcmParams::new(c, w.iter().map(|x| x / t).collect()))
    })
}

pub fn rulex() -> impl Strategy<Value = ParameterVector> {
    (0.5f64..=1.0, 0.5f64..=1.0).prop_map(|(r, x)| ParameterVector::Rulex(RulexParams::new(r, x)))
}

pub fn sustain() -> impl Strategy<Value = ParameterVector> {
    (0.0f64..20.0, 0.0f64..20.0, 0.01f64..20.0, 0.001f64..=1.0)
        .prop_map(|(r, b, d, eta)| ParameterVector::Sustain(SustainParams::new(r, b, d, eta)))
}

pub fn params(dims: usize) -> impl Strategy<Value = ParameterVector> {
    prop_oneof![gcm(dims), rulex(), sustain()]
}

/// A design together with parameters of any model fitting its dimension.
pub fn design_and_params() -> impl Strategy<Value = (ExperimentDesign, ParameterVector)> {
    design().prop_flat_map(|d| {
        let dims = d.dims();
        (Just(d), params(dims))
    })
}

/// Count vectors for every test item, each summing to the design's trials.
pub fn dataset(design: &ExperimentDesign) -> impl Strategy<Value = theory_arena::oracle::ResponseDataset> {
    let trials = design.trials_per_item;
    let id = design.id.clone();
    let test = design.test.clone();
    proptest::collection::vec(0..=trials, test.len()).prop_map(move |first| theory_arena::oracle::ResponseDataset {
        design_id: id.clone(),
        items: test
            .iter()
            .zip(first)
            .map(|(s, a)| theory_arena::oracle::ItemCounts {
                features: s.features.clone(),
                counts: vec![a, trials - a],
            })
            .collect(),
    })
}

/// Single-theory families, each with one to three particles of random model kinds.
pub fn families(dims: usize, n: usize) -> impl Strategy<Value = Vec<theory_arena::adjudication::TheoryFamily>> {
    proptest::collection::vec(
        prop_oneof![
            proptest::collection::vec((gcm(dims), 0.1f64..1.0), 1..=3),
            proptest::collection::vec((rulex(), 0.1f64..1.0), 1..=3),
            proptest::collection::vec((sustain(), 0.1f64..1.0), 1..=3),
        ],
        n,
    )
    .prop_map(|fams| {
        fams.into_iter()
            .enumerate()
            .map(|(i, ps)| {
                theory_arena::adjudication::TheoryFamily::new(
                    format!("T{i}"),
                    ps.into_iter()
                        .map(|(params, weight)| theory_arena::adjudication::Particle { params, weight })
                        .collect(),
                )
                .unwrap()
            })
            .collect()
    })
}

/// Mutual information between theory and outcome by enumerating every joint
/// count outcome; `lapsed[t][item]` is theory t's response distribution.
pub fn brute_force_eig(prior: &[f64], lapsed: &[Vec<Vec<f64>>], trials: u32) -> f64 {
    let k = lapsed[0][0].len();
    let mut comps: Vec<Vec<u32>> = Vec::new();
    fn rec(n: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            cur.push(n);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=n {
            cur.push(x);
            rec(n - x, k - 1, cur, out);
            cur.pop();
        }
    }
    rec(trials, k, &mut Vec::new(), &mut comps);
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    // per theory, per item, per composition: probability
    let item_probs: Vec<Vec<Vec<f64>>> = lapsed
        .iter()
        .map(|items| {
            items
                .iter()
                .map(|p| {
                    comps
                        .iter()
                        .map(|c| {
                            let coef = fact(trials) / c.iter().map(|&x| fact(x)).product::<f64>();
                            coef * c.iter().zip(p).map(|(&x, &q)| q.powi(x as i32)).product::<f64>()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let n_items = lapsed[0].len();
    let mut idx = vec![0usize; n_items];
    let mut mi = 0.0;
    loop {
        let py_t: Vec<f64> = item_probs
            .iter()
            .map(|items| idx.iter().enumerate().map(|(i, &o)| items[i][o]).product())
            .collect();
        let py: f64 = prior.iter().zip(&py_t).map(|(a, b)| a * b).sum();
        for (&pt, &p) in prior.iter().zip(&py_t) {
            if pt > 0.0 && p > 0.0 {
                mi += pt * p * (p / py).ln();
            }
        }
        let mut i = 0;
        loop {
            if i == n_items {
                return mi;
            }
            idx[i] += 1;
            if idx[i] < comps.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Three-dimensional two-category designs with one to four test items and one to six trials.
pub fn small_design() -> impl Strategy<Value = ExperimentDesign> {
    (
        proptest::collection::vec(proptest::option::of(0usize..2), 8),
        proptest::sample::subsequence((0..8).collect::<Vec<usize>>(), 1..=4),
        1u32..=6,
    )
        .prop_filter_map("needs both categories", |(labels, test, trials)| {
            let d = ExperimentDesign {
                id: "small".into(),
                proposer: "proptest".into(),
                training: labels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| {
                        l.map(|label| TrainingItem {
                            stimulus: Stimulus::from_index(i, 3),
                            label,
                        })
                    })
                    .collect(),
                test: test.into_iter().map(|i| Stimulus::from_index(i, 3)).collect(),
                trials_per_item: trials,
            };
            validate_design(&d, &StimulusSpace::default()).valid.then_some(d)
        })
}
