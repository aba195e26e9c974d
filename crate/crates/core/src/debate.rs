//! One adversarial-collaboration run, cycle by cycle.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::adjudication::{update_posterior, verdict, AdjudicationVerdict, Posterior, TheoryFamily};
use crate::agents::{Agent, CritiqueRecord, CycleEvidence, ProposalContext};
use crate::config::RunConfig;
use crate::design_engine::{
    argmax_eig, divergence_map_from_profiles, pool_profiles, score_pool, EigEstimate, PairSummary,
};
use crate::error::{ArenaError, Result};
use crate::key;
use crate::models::PredictiveProfile;
use crate::oracle::{generate_responses, ResponseDataset};
use crate::rng::derive_seed;
use crate::stimulus::{enumerate_designs, validate_design, ExperimentDesign, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedProposal {
    pub design_id: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProposals {
    pub agent_id: String,
    /// Inserted into the pool.
    pub accepted: Vec<String>,
    /// Failed the validity gate.
    pub rejected: Vec<RejectedProposal>,
    /// Already pooled or already run.
    pub duplicates: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredPrediction {
    pub theory: String,
    pub profile: PredictiveProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionSummary {
    pub agent_id: String,
    pub theory: String,
    pub particles_before: usize,
    pub particles_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// Pool size after proposals were inserted, before selection.
    pub pool_size: usize,
    pub divergence_summary: Vec<PairSummary>,
    pub proposals: Vec<AgentProposals>,
    pub eig_table: Vec<EigEstimate>,
    pub selected: ExperimentDesign,
    pub selected_eig: EigEstimate,
    /// Particle sets in force when predictions were registered.
    pub theories: Vec<TheoryFamily>,
    pub predictions: Vec<RegisteredPrediction>,
    pub data: ResponseDataset,
    pub posterior_before: Posterior,
    pub posterior_after: Posterior,
    pub degenerate_evidence: bool,
    pub critiques: Vec<CritiqueRecord>,
    pub agent_errors: Vec<String>,
    pub revisions: Vec<RevisionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateTrace {
    pub truth: String,
    pub epsilon: f64,
    pub master_seed: u64,
    pub cycles: Vec<CycleRecord>,
    pub final_posterior: Posterior,
    pub verdict: AdjudicationVerdict,
    pub cycles_executed: usize,
}

pub fn run_adjudication(config: &RunConfig) -> Result<DebateTrace> {
    let agents = config.agents.iter().cloned().map(Agent::new).collect();
    run_with_agents(config, agents)
}

/// Runs the loop with caller-supplied agents (one per theory, in registration order).
pub fn run_with_agents(config: &RunConfig, mut agents: Vec<Agent>) -> Result<DebateTrace> {
    config.validate()?;
    let eps = config.truth.epsilon;
    let seed = config.master_seed;
    let eig = config.eig_settings();
    let names: Vec<String> = config.theories.iter().map(|t| t.name.clone()).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();

    let mut pool = enumerate_designs(&config.space, config.seed_pool_budget)?;
    if pool.is_empty() {
        return Err(ArenaError::EmptyPool);
    }
    let mut pooled: HashSet<String> = pool.iter().map(|d| d.content_key()).collect();
    let mut executed: HashSet<String> = HashSet::new();
    let mut theories = config.theories.clone();
    let mut posterior = Posterior::uniform(name_refs.iter().copied());
    let mut records = Vec::new();

    for cycle in 1..=config.cycles {
        if pool.is_empty() {
            break;
        }
        let mut profiles = pool_profiles(&theories, &pool)?;
        let ids: Vec<&str> = pool.iter().map(|d| d.id.as_str()).collect();
        let divergence = divergence_map_from_profiles(&name_refs, &ids, &profiles, config.divergence_top_n)?;

        let mut proposals = Vec::new();
        let mut inserted = Vec::new();
        for agent in agents.iter_mut() {
            let agent_id = agent.descriptor.agent_id.clone();
            let ctx = ProposalContext {
                cycle,
                rng_key: derive_seed(key![seed, "propose", &agent_id, cycle]),
                space: &config.space,
                pool: &pool,
            };
            let mut entry = AgentProposals {
                agent_id,
                accepted: vec![],
                rejected: vec![],
                duplicates: vec![],
                error: None,
            };
            match agent.propose_experiments(&divergence, ctx, config.proposals_per_agent) {
                Ok(designs) => {
                    for d in designs {
                        let report = validate_design(&d, &config.space);
                        if !report.valid {
                            entry.rejected.push(RejectedProposal {
                                design_id: d.id,
                                violations: report.violations,
                            });
                            continue;
                        }
                        let content = d.content_key();
                        let id_taken = pool.iter().chain(&inserted).any(|p: &ExperimentDesign| p.id == d.id);
                        if id_taken || pooled.contains(&content) || executed.contains(&content) {
                            entry.duplicates.push(d.id);
                            continue;
                        }
                        pooled.insert(content);
                        entry.accepted.push(d.id.clone());
                        inserted.push(d);
                    }
                }
                Err(e) => entry.error = Some(format!("{}: {e}", e.code())),
            }
            proposals.push(entry);
        }
        if !inserted.is_empty() {
            profiles.extend(pool_profiles(&theories, &inserted)?);
            pool.extend(inserted);
        }

        let prior_weights: Vec<f64> = names.iter().map(|n| posterior.get(n).unwrap_or(0.0)).collect();
        let scores = score_pool(&pool, &profiles, &prior_weights, eps, &eig);
        let best = argmax_eig(&pool, &scores)?;
        let pool_size = pool.len();
        let selected = pool.remove(best);
        let selected_profiles = profiles.remove(best);
        let selected_eig = scores[best].clone();
        pooled.remove(&selected.content_key());
        executed.insert(selected.content_key());

        let predictions = names
            .iter()
            .zip(selected_profiles)
            .map(|(theory, profile)| RegisteredPrediction {
                theory: theory.clone(),
                profile,
            })
            .collect();
        let data = generate_responses(&config.truth, &selected, seed)?;
        let update = update_posterior(&posterior, &theories, &selected, &data, eps)?;

        let observed = data
            .items
            .iter()
            .map(|i| {
                let n: u32 = i.counts.iter().sum();
                i.counts.iter().map(|&c| c as f64 / n.max(1) as f64).collect()
            })
            .collect();
        let evidence = CycleEvidence {
            cycle,
            before: &posterior,
            after: &update.posterior,
            design_id: &selected.id,
            observed,
        };
        let mut critiques = Vec::new();
        let mut agent_errors = Vec::new();
        for agent in agents.iter_mut() {
            match agent.critique(&evidence) {
                Ok(c) => critiques.push(c),
                Err(e) => agent_errors.push(format!("{}: {e}", e.code())),
            }
        }

        let used_theories = std::mem::replace(&mut theories, update.theories);
        let mut revisions = Vec::new();
        for agent in &agents {
            let idx = names
                .iter()
                .position(|n| *n == agent.descriptor.theory)
                .ok_or_else(|| ArenaError::UnknownTheory(agent.descriptor.theory.clone()))?;
            let before = theories[idx].particles.len();
            let key = derive_seed(key![seed, "revise", &agent.descriptor.agent_id, cycle]);
            theories[idx] = agent.revise_particles(&theories[idx], key)?;
            revisions.push(RevisionSummary {
                agent_id: agent.descriptor.agent_id.clone(),
                theory: agent.descriptor.theory.clone(),
                particles_before: before,
                particles_after: theories[idx].particles.len(),
            });
        }

        let posterior_before = std::mem::replace(&mut posterior, update.posterior);
        records.push(CycleRecord {
            cycle,
            pool_size,
            divergence_summary: divergence.summary,
            proposals,
            eig_table: scores,
            selected,
            selected_eig,
            theories: used_theories,
            predictions,
            data,
            posterior_before,
            posterior_after: posterior.clone(),
            degenerate_evidence: update.degenerate_evidence,
            critiques,
            agent_errors,
            revisions,
        });

        if posterior.argmax().is_some_and(|(_, p)| p >= config.stop_threshold) {
            break;
        }
    }

    let truth = config.truth.theory_name();
    let verdict = verdict(&posterior, &truth)?;
    Ok(DebateTrace {
        truth,
        epsilon: eps,
        master_seed: seed,
        cycles_executed: records.len(),
        cycles: records,
        final_posterior: posterior,
        verdict,
    })
}

/// Recomputes the posterior after every cycle from the recorded particle
/// sets and datasets, starting from a uniform prior.
pub fn replay_posteriors(trace: &DebateTrace) -> Result<Vec<Posterior>> {
    let Some(first) = trace.cycles.first() else {
        return Ok(Vec::new());
    };
    let mut posterior = Posterior::uniform(first.theories.iter().map(|t| t.name.as_str()));
    let mut out = Vec::with_capacity(trace.cycles.len());
    for record in &trace.cycles {
        let up = update_posterior(&posterior, &record.theories, &record.selected, &record.data, trace.epsilon)?;
        posterior = up.posterior;
        out.push(posterior.clone());
    }
    Ok(out)
}
