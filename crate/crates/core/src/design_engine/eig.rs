//! Expected information gain about the theory indicator.
//!
//! The outcome of a design is the vector of per-item response counts. Under
//! theory `t` each item's counts are multinomial with the theory's lapsed
//! particle-mixture profile, independently across items. The EIG is the
//! mutual information between `t ~ prior` and that outcome.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adjudication::{Posterior, TheoryFamily};
use crate::error::Result;
use crate::key;
use crate::models::{lapse_item, theory_predict, PredictiveProfile};
use crate::oracle::sample_categorical;
use crate::rng::stream;
use crate::stimulus::ExperimentDesign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EigMethod {
    Exact,
    MonteCarlo,
}

impl EigMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EigMethod::Exact => "EXACT",
            EigMethod::MonteCarlo => "MONTE_CARLO",
        }
    }
}

impl std::fmt::Display for EigMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigEstimate {
    pub design_id: String,
    /// Nats.
    pub value: f64,
    pub method: EigMethod,
    pub mc_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigSettings {
    pub mc_samples: usize,
    /// Largest outcome space enumerated exactly.
    pub exact_cutoff: u64,
    /// Seed of the Monte Carlo streams.
    pub seed: u64,
}

impl Default for EigSettings {
    fn default() -> Self {
        EigSettings {
            mc_samples: 20_000,
            exact_cutoff: 200_000,
            seed: 0,
        }
    }
}

pub fn expected_information_gain(
    prior: &Posterior,
    theories: &[TheoryFamily],
    design: &ExperimentDesign,
    epsilon: f64,
    settings: &EigSettings,
) -> Result<EigEstimate> {
    let profiles = theories
        .iter()
        .map(|t| theory_predict(t, design))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = theories
        .iter()
        .map(|t| prior.get(&t.name).unwrap_or(0.0))
        .collect();
    Ok(eig_from_profiles(&weights, &profiles, design, epsilon, settings))
}

/// Number of joint count outcomes of a design with `k` categories.
pub fn outcome_space_size(design: &ExperimentDesign, k: usize) -> f64 {
    let per_item = binomial(design.trials_per_item as u64 + k as u64 - 1, k as u64 - 1);
    per_item.powi(design.test.len() as i32)
}

fn binomial(n: u64, r: u64) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All count vectors of `k` nonnegative parts summing to `n`, in lexicographic order.
fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, k: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=n {
            prefix.push(first);
            rec(n - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Per-item outcome tables: `log_p[item][outcome][theory]` and the per-theory
/// CDF over outcomes used for sampling.
struct OutcomeTables {
    log_p: Vec<Vec<Vec<f64>>>,
    cdf: Vec<Vec<Vec<f64>>>,
}

fn outcome_tables(lapsed: &[Vec<Vec<f64>>], trials: u32) -> OutcomeTables {
    let n_items = lapsed[0].len();
    let k = lapsed[0][0].len();
    let comps = compositions(trials, k);
    let log_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=trials).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut log_p = Vec::with_capacity(n_items);
    let mut cdf = Vec::with_capacity(n_items);
    for i in 0..n_items {
        let table: Vec<Vec<f64>> = comps
            .iter()
            .map(|c| {
                let coef = log_fact[trials as usize] - c.iter().map(|&x| log_fact[x as usize]).sum::<f64>();
                lapsed
                    .iter()
                    .map(|prof| {
                        let mut l = coef;
                        for (&x, &p) in c.iter().zip(&prof[i]) {
                            if x > 0 {
                                l += x as f64 * p.ln();
                            }
                        }
                        l
                    })
                    .collect()
            })
            .collect();
        let per_theory_cdf = (0..lapsed.len())
            .map(|t| {
                let mut acc = 0.0;
                table
                    .iter()
                    .map(|row| {
                        acc += row[t].exp();
                        acc
                    })
                    .collect()
            })
            .collect();
        log_p.push(table);
        cdf.push(per_theory_cdf);
    }
    OutcomeTables { log_p, cdf }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// EIG from precomputed (unlapsed) theory-mixture profiles and prior weights
/// given in the same order.
pub fn eig_from_profiles(
    prior: &[f64],
    profiles: &[PredictiveProfile],
    design: &ExperimentDesign,
    epsilon: f64,
    settings: &EigSettings,
) -> EigEstimate {
    let exact = |value: f64| EigEstimate {
        design_id: design.id.clone(),
        value,
        method: EigMethod::Exact,
        mc_samples: 0,
    };
    let total: f64 = prior.iter().sum();
    let live: Vec<usize> = (0..prior.len()).filter(|&t| prior[t] > 0.0).collect();
    let lapsed: Vec<Vec<Vec<f64>>> = live
        .iter()
        .map(|&t| profiles[t].items.iter().map(|p| lapse_item(p, epsilon)).collect())
        .collect();
    // nothing to learn: one live theory, or every live theory predicts the same outcome law
    if live.len() < 2 || lapsed.iter().all(|l| l == &lapsed[0]) || design.test.is_empty() {
        return exact(0.0);
    }
    let weights: Vec<f64> = live.iter().map(|&t| prior[t] / total).collect();
    let entropy: f64 = -weights.iter().map(|&w| w * w.ln()).sum::<f64>();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let k = lapsed[0][0].len();
    let tables = outcome_tables(&lapsed, design.trials_per_item);

    let clamp = |v: f64| v.clamp(0.0, entropy);
    if outcome_space_size(design, k) <= settings.exact_cutoff as f64 {
        exact(clamp(exact_mutual_information(&weights, &log_w, &tables)))
    } else {
        let seed_key = design.content_key();
        let value = monte_carlo_mutual_information(&weights, &log_w, &tables, settings.mc_samples, || {
            stream(key![settings.seed, "eig", &seed_key])
        });
        EigEstimate {
            design_id: design.id.clone(),
            value: clamp(value),
            method: EigMethod::MonteCarlo,
            mc_samples: settings.mc_samples,
        }
    }
}

fn exact_mutual_information(weights: &[f64], log_w: &[f64], tables: &OutcomeTables) -> f64 {
    let n_items = tables.log_p.len();
    let n_t = weights.len();
    let sizes: Vec<usize> = tables.log_p.iter().map(Vec::len).collect();
    let mut idx = vec![0usize; n_items];
    let mut mi = 0.0;
    let mut l = vec![0.0; n_t];
    loop {
        for (t, lt) in l.iter_mut().enumerate() {
            *lt = (0..n_items).map(|i| tables.log_p[i][idx[i]][t]).sum();
        }
        let log_py = log_sum_exp((0..n_t).map(|t| log_w[t] + l[t]));
        for t in 0..n_t {
            if l[t].is_finite() {
                mi += weights[t] * l[t].exp() * (l[t] - log_py);
            }
        }
        let mut pos = n_items;
        loop {
            if pos == 0 {
                return mi;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn monte_carlo_mutual_information<R: Rng>(
    weights: &[f64],
    log_w: &[f64],
    tables: &OutcomeTables,
    samples: usize,
    make_rng: impl FnOnce() -> R,
) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let mut rng = make_rng();
    let n_t = weights.len();
    let mut l = vec![0.0; n_t];
    let mut acc = 0.0;
    for _ in 0..samples {
        let t = sample_categorical(weights, rng.random::<f64>());
        l.iter_mut().for_each(|v| *v = 0.0);
        for (item_log_p, item_cdf) in tables.log_p.iter().zip(&tables.cdf) {
            let cdf = &item_cdf[t];
            let u = rng.random::<f64>() * cdf[cdf.len() - 1];
            let y = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            for (lt, &lp) in l.iter_mut().zip(&item_log_p[y]) {
                *lt += lp;
            }
        }
        let log_py = log_sum_exp((0..n_t).map(|s| log_w[s] + l[s]));
        acc += l[t] - log_py;
    }
    acc / samples as f64
}
