//! Pairwise Jensen–Shannon divergence between theory predictions over a pool.

use serde::{Deserialize, Serialize};

use crate::adjudication::TheoryFamily;
use crate::error::{ArenaError, Result};
use crate::models::{theory_predict, PredictiveProfile};
use crate::stimulus::ExperimentDesign;

pub const DEFAULT_TOP_N: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceEntry {
    pub design_id: String,
    pub pair: (String, String),
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair: (String, String),
    pub top: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMap {
    pub entries: Vec<DivergenceEntry>,
    pub summary: Vec<PairSummary>,
}

impl DivergenceMap {
    /// Divergence of `design_id` between the two named theories, in either order.
    pub fn value(&self, design_id: &str, a: &str, b: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| {
                e.design_id == design_id
                    && ((e.pair.0 == a && e.pair.1 == b) || (e.pair.0 == b && e.pair.1 == a))
            })
            .map(|e| e.value)
    }

    /// Sum of divergences between `theory` and every rival, per design, in pool order.
    pub fn rival_totals(&self, theory: &str) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for e in &self.entries {
            if e.pair.0 != theory && e.pair.1 != theory {
                continue;
            }
            match out.iter_mut().find(|(id, _)| *id == e.design_id) {
                Some((_, v)) => *v += e.value,
                None => out.push((e.design_id.clone(), e.value)),
            }
        }
        out
    }
}

fn kl_to_mid(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pv, _)| pv > 0.0)
        .map(|(&pv, &mv)| pv * (pv / mv).ln())
        .sum()
}

/// Jensen–Shannon divergence in nats; bounded by ln 2.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl_to_mid(p, &m) + 0.5 * kl_to_mid(q, &m)).max(0.0)
}

/// Mean per-item JS divergence between two profiles of the same design.
pub fn profile_divergence(a: &PredictiveProfile, b: &PredictiveProfile) -> f64 {
    if a.items.is_empty() {
        return 0.0;
    }
    a.items
        .iter()
        .zip(&b.items)
        .map(|(p, q)| jensen_shannon(p, q))
        .sum::<f64>()
        / a.items.len() as f64
}

pub fn divergence_map(theories: &[TheoryFamily], pool: &[ExperimentDesign]) -> Result<DivergenceMap> {
    if pool.is_empty() {
        return Err(ArenaError::EmptyPool);
    }
    let profiles = pool
        .iter()
        .map(|d| theories.iter().map(|t| theory_predict(t, d)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<&str> = theories.iter().map(|t| t.name.as_str()).collect();
    let ids: Vec<&str> = pool.iter().map(|d| d.id.as_str()).collect();
    divergence_map_from_profiles(&names, &ids, &profiles, DEFAULT_TOP_N)
}

/// Builds the map from precomputed per-design, per-theory mixture profiles.
pub fn divergence_map_from_profiles(
    names: &[&str],
    design_ids: &[&str],
    profiles: &[Vec<PredictiveProfile>],
    top_n: usize,
) -> Result<DivergenceMap> {
    if design_ids.is_empty() {
        return Err(ArenaError::EmptyPool);
    }
    let mut entries = Vec::new();
    let mut summary = Vec::new();
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let pair = (names[i].to_string(), names[j].to_string());
            let mut scored: Vec<(f64, &str)> = design_ids
                .iter()
                .zip(profiles)
                .map(|(id, per_theory)| (profile_divergence(&per_theory[i], &per_theory[j]), *id))
                .collect();
            for &(value, id) in &scored {
                entries.push(DivergenceEntry {
                    design_id: id.to_string(),
                    pair: pair.clone(),
                    value,
                });
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            summary.push(PairSummary {
                pair,
                top: scored.iter().take(top_n).map(|(_, id)| id.to_string()).collect(),
            });
        }
    }
    Ok(DivergenceMap { entries, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximal_disagreement_is_ln2() {
        assert!((jensen_shannon(&[1.0, 0.0], &[0.0, 1.0]) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn identical_is_zero_and_symmetric() {
        assert_eq!(jensen_shannon(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
        let a = [0.2, 0.8];
        let b = [0.9, 0.1];
        assert_eq!(jensen_shannon(&a, &b), jensen_shannon(&b, &a));
    }

    #[test]
    fn map_summary_ranks_designs() {
        let prof = |v: f64| PredictiveProfile {
            design_id: "x".into(),
            items: vec![vec![v, 1.0 - v]],
        };
        let profiles = vec![vec![prof(0.5), prof(0.5)], vec![prof(1.0), prof(0.0)], vec![prof(0.8), prof(0.3)]];
        let map = divergence_map_from_profiles(&["A", "B"], &["d0", "d1", "d2"], &profiles, 2).unwrap();
        assert_eq!(map.summary[0].top, vec!["d1", "d2"]);
        assert_eq!(map.value("d0", "B", "A"), Some(0.0));
        assert!((map.value("d1", "A", "B").unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(matches!(
            divergence_map_from_profiles(&["A", "B"], &[], &[], 2),
            Err(ArenaError::EmptyPool)
        ));
    }
}
