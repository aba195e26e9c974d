//! Theory agents: proposal, critique and particle revision.
//!
//! Scripted agents are deterministic given their inputs and the stream key.
//! External agents speak the protocol in [`external`].

pub mod external;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::time::Duration;

use crate::adjudication::{Particle, Posterior, TheoryFamily};
use crate::design_engine::DivergenceMap;
use crate::error::{ArenaError, Result};
use crate::key;
use crate::rng::stream;
use crate::stimulus::{validate_design, ExperimentDesign, Stimulus, StimulusSpace, TrainingItem};

use external::{AgentChannel, ChildProcessChannel, RequestType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentKind {
    ScriptedMaxdiv,
    ScriptedRandom,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentDescriptor {
    pub agent_id: String,
    /// Name of the registered theory this agent argues for.
    pub theory: String,
    pub kind: AgentKind,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_scale")]
    pub perturbation_scale: f64,
    /// Program and arguments of an external agent.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_top_k() -> usize {
    27
}

fn default_scale() -> f64 {
    0.15
}

fn default_timeout() -> u64 {
    external::DEFAULT_TIMEOUT_MS
}

impl AgentDescriptor {
    pub fn scripted(agent_id: impl Into<String>, theory: impl Into<String>, kind: AgentKind) -> Self {
        AgentDescriptor {
            agent_id: agent_id.into(),
            theory: theory.into(),
            kind,
            top_k: default_top_k(),
            perturbation_scale: default_scale(),
            command: Vec::new(),
            timeout_ms: default_timeout(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ClaimCode {
    Overfit,
    Underpredicted,
    Consistent,
}

impl std::str::FromStr for ClaimCode {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "OVERFIT" => Ok(ClaimCode::Overfit),
            "UNDERPREDICTED" => Ok(ClaimCode::Underpredicted),
            "CONSISTENT" => Ok(ClaimCode::Consistent),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub rival: String,
    pub claim: ClaimCode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CritiqueRecord {
    pub agent_id: String,
    pub cycle: usize,
    pub text: String,
    pub claims: Vec<Claim>,
}

/// What an agent sees after an experiment has been run.
#[derive(Debug, Clone, Serialize)]
pub struct CycleEvidence<'a> {
    pub cycle: usize,
    pub before: &'a Posterior,
    pub after: &'a Posterior,
    pub design_id: &'a str,
    /// Observed proportion of each category per test item.
    pub observed: Vec<Vec<f64>>,
}

/// Where a proposal request comes from.
#[derive(Debug, Clone, Copy)]
pub struct ProposalContext<'a> {
    pub cycle: usize,
    pub rng_key: u64,
    pub space: &'a StimulusSpace,
    pub pool: &'a [ExperimentDesign],
}

/// A registered agent plus its transport, when external.
pub struct Agent {
    pub descriptor: AgentDescriptor,
    channel: Option<Box<dyn AgentChannel>>,
}

impl std::fmt::Debug for Agent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Agent")
            .field("descriptor", &self.descriptor)
            .field("connected", &self.channel.is_some())
            .finish()
    }
}

impl Agent {
    pub fn new(descriptor: AgentDescriptor) -> Self {
        Agent {
            descriptor,
            channel: None,
        }
    }

    /// Attaches a transport directly instead of spawning `descriptor.command`.
    pub fn with_channel(descriptor: AgentDescriptor, channel: Box<dyn AgentChannel>) -> Self {
        Agent {
            descriptor,
            channel: Some(channel),
        }
    }

    fn channel(&mut self) -> Result<&mut Box<dyn AgentChannel>> {
        if self.channel.is_none() {
            let ch = ChildProcessChannel::spawn(
                &self.descriptor.agent_id,
                &self.descriptor.command,
                Duration::from_millis(self.descriptor.timeout_ms),
            )?;
            self.channel = Some(Box::new(ch));
        }
        Ok(self.channel.as_mut().expect("just connected"))
    }

    pub fn propose_experiments(
        &mut self,
        divergence: &DivergenceMap,
        ctx: ProposalContext<'_>,
        count: usize,
    ) -> Result<Vec<ExperimentDesign>> {
        match self.descriptor.kind {
            AgentKind::ScriptedMaxdiv => Ok(propose_maxdiv(&self.descriptor, divergence, ctx, count)),
            AgentKind::ScriptedRandom => Ok(propose_random(&self.descriptor, ctx, count)),
            AgentKind::External => self.propose_external(divergence, ctx, count),
        }
    }

    fn propose_external(
        &mut self,
        divergence: &DivergenceMap,
        ctx: ProposalContext<'_>,
        count: usize,
    ) -> Result<Vec<ExperimentDesign>> {
        let d = self.descriptor.clone();
        let payload = serde_json::json!({
            "agent_id": d.agent_id,
            "theory": d.theory,
            "cycle": ctx.cycle,
            "count": count,
            "space": ctx.space,
            "divergence_summary": divergence.summary,
        });
        let resp = self.channel()?.call(RequestType::Propose, payload)?;
        Ok(resp
            .designs
            .into_iter()
            .filter_map(|v| serde_json::from_value::<ExperimentDesign>(v).ok())
            .map(|mut design| {
                design.proposer = d.agent_id.clone();
                design
            })
            .filter(|design| validate_design(design, ctx.space).valid)
            .take(count)
            .collect())
    }

    pub fn critique(&mut self, evidence: &CycleEvidence<'_>) -> Result<CritiqueRecord> {
        if self.descriptor.kind != AgentKind::External {
            return Ok(scripted_critique(&self.descriptor, evidence));
        }
        let d = self.descriptor.clone();
        let payload = serde_json::json!({
            "agent_id": d.agent_id,
            "theory": d.theory,
            "evidence": evidence,
        });
        let resp = self.channel()?.call(RequestType::Critique, payload)?;
        Ok(CritiqueRecord {
            agent_id: d.agent_id,
            cycle: evidence.cycle,
            text: resp.text,
            claims: resp
                .claims
                .into_iter()
                .filter_map(|c| {
                    c.claim.parse().ok().map(|claim| Claim {
                        rival: c.rival,
                        claim,
                    })
                })
                .collect(),
        })
    }

    pub fn revise_particles(&self, theory: &TheoryFamily, rng_key: u64) -> Result<TheoryFamily> {
        revise_particles(&self.descriptor, theory, rng_key)
    }
}

fn proposal_id(agent: &AgentDescriptor, cycle: usize, i: usize) -> String {
    format!("{}-c{cycle:02}-{i:02}", agent.agent_id)
}

/// Pool designs with the largest summed divergence between the agent's
/// theory and its rivals, each moved by one random edit.
fn propose_maxdiv(
    agent: &AgentDescriptor,
    divergence: &DivergenceMap,
    ctx: ProposalContext<'_>,
    count: usize,
) -> Vec<ExperimentDesign> {
    let mut ranked = divergence.rival_totals(&agent.theory);
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
        .iter()
        .filter_map(|(id, _)| ctx.pool.iter().find(|d| &d.id == id))
        .take(count)
        .enumerate()
        .map(|(i, original)| {
            let mut rng = stream(key![ctx.rng_key, "mutate", i]);
            let mut mutated = mutate(original, ctx.space, &mut rng);
            mutated.id = proposal_id(agent, ctx.cycle, i);
            mutated.proposer = agent.agent_id.clone();
            if validate_design(&mutated, ctx.space).valid {
                mutated
            } else {
                original.clone()
            }
        })
        .collect()
}

/// One edit of a random training item: relabel it or flip one of its features.
fn mutate(design: &ExperimentDesign, space: &StimulusSpace, rng: &mut impl Rng) -> ExperimentDesign {
    let mut out = design.clone();
    if out.training.is_empty() {
        return out;
    }
    let i = rng.random_range(0..out.training.len());
    let item = &mut out.training[i];
    if rng.random_bool(0.5) {
        let shift = rng.random_range(1..space.categories);
        item.label = (item.label + shift) % space.categories;
    } else if !item.stimulus.features.is_empty() {
        let k = rng.random_range(0..item.stimulus.features.len());
        item.stimulus.features[k] ^= 1;
    }
    out
}

/// Uniformly random valid designs: a random training set size, a random
/// subset of stimuli and random labels, resampled until every category is present.
fn propose_random(agent: &AgentDescriptor, ctx: ProposalContext<'_>, count: usize) -> Vec<ExperimentDesign> {
    let space = ctx.space;
    let n = space.n_stimuli();
    let mut rng = stream(key![ctx.rng_key, "random-designs"]);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 1000 * count.max(1) {
        attempts += 1;
        let size = rng.random_range(space.categories..=space.max_train_items.min(n));
        let mut ids = sample(&mut rng, n, size).into_vec();
        ids.sort_unstable();
        let design = ExperimentDesign {
            id: proposal_id(agent, ctx.cycle, out.len()),
            proposer: agent.agent_id.clone(),
            training: ids
                .into_iter()
                .map(|i| TrainingItem {
                    stimulus: Stimulus::from_index(i, space.dims),
                    label: rng.random_range(0..space.categories),
                })
                .collect(),
            test: space.default_test_items(),
            trials_per_item: space.trials_per_test_item,
        };
        if validate_design(&design, space).valid {
            out.push(design);
        }
    }
    out
}

fn scripted_critique(agent: &AgentDescriptor, ev: &CycleEvidence<'_>) -> CritiqueRecord {
    let mut claims = Vec::new();
    let mut notes = Vec::new();
    for (rival, &after) in &ev.after.0 {
        if rival == &agent.theory {
            continue;
        }
        let before = ev.before.get(rival).unwrap_or(0.0);
        let claim = if after < before {
            ClaimCode::Consistent
        } else {
            ClaimCode::Underpredicted
        };
        notes.push(format!("{rival} {before:.3}->{after:.3}"));
        claims.push(Claim {
            rival: rival.clone(),
            claim,
        });
    }
    let own = (
        ev.before.get(&agent.theory).unwrap_or(0.0),
        ev.after.get(&agent.theory).unwrap_or(0.0),
    );
    CritiqueRecord {
        agent_id: agent.agent_id.clone(),
        cycle: ev.cycle,
        text: format!(
            "{} on {}: own {:.3}->{:.3}; rivals {}",
            agent.theory,
            ev.design_id,
            own.0,
            own.1,
            notes.join(", ")
        ),
        claims,
    }
}

/// Keeps the `top_k` heaviest particles, adds one log-normal neighbor of each
/// and resets the weights to uniform.
pub fn revise_particles(agent: &AgentDescriptor, theory: &TheoryFamily, rng_key: u64) -> Result<TheoryFamily> {
    if agent.theory != theory.name {
        return Err(ArenaError::TheoryMismatch {
            expected: agent.theory.clone(),
            found: theory.name.clone(),
        });
    }
    let mut order: Vec<usize> = (0..theory.particles.len()).collect();
    order.sort_by(|&a, &b| {
        theory.particles[b]
            .weight
            .total_cmp(&theory.particles[a].weight)
            .then(a.cmp(&b))
    });
    order.truncate(agent.top_k.max(1));
    let scale = agent.perturbation_scale.max(0.0);
    let normal = Normal::new(0.0, scale).expect("finite nonnegative scale");
    let mut particles = Vec::with_capacity(2 * order.len());
    for &i in &order {
        particles.push(theory.particles[i].params.clone());
    }
    for (j, &i) in order.iter().enumerate() {
        let mut rng = stream(key![rng_key, "revise", j]);
        particles.push(theory.particles[i].params.perturbed(|| normal.sample(&mut rng)));
    }
    let particles = particles
        .into_iter()
        .map(|params| Particle { params, weight: 1.0 })
        .collect();
    let mut out = TheoryFamily::new(theory.name.clone(), particles)?;
    out.kind = theory.kind;
    Ok(out)
}
