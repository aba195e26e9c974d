//! Multi-run theory-recovery study over ground truths and lapse rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjudication::Posterior;
use crate::config::{FileConfig, StudyConfig};
use crate::debate::{run_adjudication, DebateTrace};
use crate::error::Result;
use crate::key;
use crate::models::ModelKind;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub truth: String,
    pub epsilon: f64,
    pub replication: usize,
    pub seed: u64,
    pub winner: String,
    pub recovered: bool,
    pub margin: f64,
    pub cycles_used: usize,
    pub final_posterior: Posterior,
    /// Set when the run failed; such rows count as not recovered and carry no margin.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub truth: String,
    pub epsilon: f64,
    pub runs: usize,
    pub recovery_rate: f64,
    /// Mean over rows without errors; NaN when every row failed.
    pub mean_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTable {
    pub rows: Vec<RecoveryRow>,
    pub cells: Vec<CellSummary>,
}

impl RecoveryTable {
    pub fn cell(&self, truth: &str, epsilon: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.truth == truth && c.epsilon == epsilon)
    }
}

pub struct RecoveryStudy {
    pub table: RecoveryTable,
    /// Trace of every row, in row order; `None` for failed runs.
    pub traces: Vec<Option<DebateTrace>>,
}

/// Seed of one study cell replication, independent of scheduling.
pub fn run_seed(master_seed: u64, truth: &str, epsilon: f64, replication: usize) -> u64 {
    derive_seed(key![master_seed, "run", truth, epsilon, replication])
}

/// Runs every (truth, ε, replication) in parallel; rows come back ordered by
/// truth, then ε, then replication, exactly as listed in `study`.
pub fn run_recovery_study(base: &FileConfig, study: &StudyConfig, master_seed: u64) -> Result<RecoveryStudy> {
    study.validate()?;
    // fail fast on configuration problems shared by every cell
    for &truth in &study.truths {
        base.run_config_for(truth, study.epsilons[0], master_seed)?;
    }
    let jobs: Vec<(ModelKind, f64, usize)> = study
        .truths
        .iter()
        .flat_map(|&t| {
            study
                .epsilons
                .iter()
                .flat_map(move |&e| (0..study.replications).map(move |r| (t, e, r)))
        })
        .collect();
    let results: Vec<(RecoveryRow, Option<DebateTrace>)> = jobs
        .par_iter()
        .map(|&(truth, epsilon, replication)| {
            let name = truth.as_str();
            let seed = run_seed(master_seed, name, epsilon, replication);
            let outcome = base
                .run_config_for(truth, epsilon, seed)
                .and_then(|cfg| run_adjudication(&cfg));
            match outcome {
                Ok(trace) => (
                    RecoveryRow {
                        truth: name.to_string(),
                        epsilon,
                        replication,
                        seed,
                        winner: trace.verdict.winner.clone(),
                        recovered: trace.verdict.recovered,
                        margin: trace.verdict.margin,
                        cycles_used: trace.cycles_executed,
                        final_posterior: trace.final_posterior.clone(),
                        error: None,
                    },
                    Some(trace),
                ),
                Err(e) => (
                    RecoveryRow {
                        truth: name.to_string(),
                        epsilon,
                        replication,
                        seed,
                        winner: String::new(),
                        recovered: false,
                        margin: f64::NAN,
                        cycles_used: 0,
                        final_posterior: Posterior(Default::default()),
                        error: Some(format!("{}: {e}", e.code())),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (rows, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let cells = summarize(&rows);
    Ok(RecoveryStudy {
        table: RecoveryTable { rows, cells },
        traces,
    })
}

/// Per-(truth, ε) aggregates, in order of first appearance.
pub fn summarize(rows: &[RecoveryRow]) -> Vec<CellSummary> {
    let mut keys: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(t, e)| *t == r.truth && *e == r.epsilon) {
            keys.push((&r.truth, r.epsilon));
        }
    }
    keys.into_iter()
        .map(|(truth, epsilon)| {
            let cell: Vec<&RecoveryRow> = rows
                .iter()
                .filter(|r| r.truth == truth && r.epsilon == epsilon)
                .collect();
            let recovered = cell.iter().filter(|r| r.recovered).count();
            let ok: Vec<f64> = cell.iter().filter(|r| r.error.is_none()).map(|r| r.margin).collect();
            CellSummary {
                truth: truth.to_string(),
                epsilon,
                runs: cell.len(),
                recovery_rate: recovered as f64 / cell.len() as f64,
                mean_margin: if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().sum::<f64>() / ok.len() as f64
                },
            }
        })
        .collect()
}
