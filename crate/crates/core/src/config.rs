//! Run configuration, defaults and the TOML config file.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::adjudication::TheoryFamily;
use crate::agents::{AgentDescriptor, AgentKind};
use crate::design_engine::{EigSettings, DEFAULT_TOP_N};
use crate::error::{ArenaError, Result};
use crate::models::{GcmParams, ModelKind, ParameterVector, RulexParams, SustainParams};
use crate::oracle::GroundTruth;
use crate::stimulus::StimulusSpace;

/// Lapse grid used by the recovery study unless overridden.
pub const DEFAULT_EPSILONS: [f64; 4] = [0.0, 0.1, 0.2, 0.4];

/// Everything a single adjudication run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub space: StimulusSpace,
    pub truth: GroundTruth,
    pub agents: Vec<AgentDescriptor>,
    pub theories: Vec<TheoryFamily>,
    pub cycles: usize,
    pub seed_pool_budget: usize,
    pub proposals_per_agent: usize,
    pub stop_threshold: f64,
    pub master_seed: u64,
    pub mc_samples: usize,
    pub exact_cutoff: u64,
    pub divergence_top_n: usize,
}

impl RunConfig {
    /// Default run: all three theories with their initial grids, one
    /// divergence-seeking agent per theory and the fiducial truth of `truth`.
    pub fn default_for(truth: ModelKind, epsilon: f64, master_seed: u64) -> Result<Self> {
        let space = StimulusSpace::default();
        let fiducials = Fiducials::default();
        let theories = ModelKind::ALL
            .iter()
            .map(|&k| initial_family(k, space.dims))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunConfig {
            truth: GroundTruth::new(fiducials.params(truth, space.dims), epsilon)?,
            agents: default_agents(&theories, &AgentDefaults::default()),
            theories,
            space,
            cycles: 5,
            seed_pool_budget: 64,
            proposals_per_agent: 3,
            stop_threshold: 0.95,
            master_seed,
            mc_samples: EigSettings::default().mc_samples,
            exact_cutoff: EigSettings::default().exact_cutoff,
            divergence_top_n: DEFAULT_TOP_N,
        })
    }

    pub fn eig_settings(&self) -> EigSettings {
        EigSettings {
            mc_samples: self.mc_samples,
            exact_cutoff: self.exact_cutoff,
            seed: self.master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.cycles == 0 {
            return Err(ArenaError::config("cycles", "must be at least 1"));
        }
        if self.seed_pool_budget == 0 {
            return Err(ArenaError::config("seed_pool_budget", "must be at least 1"));
        }
        if !(self.stop_threshold > 0.5 && self.stop_threshold <= 1.0) {
            return Err(ArenaError::config(
                "stop_threshold",
                format!("{} not in (0.5, 1]", self.stop_threshold),
            ));
        }
        if !(0.0..=1.0).contains(&self.truth.epsilon) {
            return Err(ArenaError::config(
                "truth.epsilon",
                format!("{} not in [0, 1]", self.truth.epsilon),
            ));
        }
        self.truth
            .params
            .validate()
            .map_err(|e| ArenaError::config("truth", e.to_string()))?;
        if self.theories.len() < 2 {
            return Err(ArenaError::config("theories", "at least two theories are required"));
        }
        let mut names = BTreeSet::new();
        for t in &self.theories {
            if !names.insert(t.name.as_str()) {
                return Err(ArenaError::config("theories", format!("duplicate theory {}", t.name)));
            }
            if t.particles.is_empty() || !t.is_normalized() {
                return Err(ArenaError::config("theories", format!("{} has unnormalized particles", t.name)));
            }
            for p in &t.particles {
                if p.params.kind() != t.kind {
                    return Err(ArenaError::config("theories", format!("{} mixes model kinds", t.name)));
                }
                p.params
                    .validate()
                    .map_err(|e| ArenaError::config("theories", format!("{}: {e}", t.name)))?;
            }
        }
        if !names.contains(self.truth.theory_name().as_str()) {
            return Err(ArenaError::config(
                "truth.theory",
                format!("{} is not a registered theory", self.truth.theory_name()),
            ));
        }
        let mut agent_ids = BTreeSet::new();
        let mut covered = BTreeSet::new();
        for a in &self.agents {
            if !agent_ids.insert(a.agent_id.as_str()) {
                return Err(ArenaError::config("agents", format!("duplicate agent id {}", a.agent_id)));
            }
            if !names.contains(a.theory.as_str()) {
                return Err(ArenaError::config("agents", format!("{} argues for unknown theory {}", a.agent_id, a.theory)));
            }
            if !covered.insert(a.theory.as_str()) {
                return Err(ArenaError::config("agents", format!("theory {} has more than one agent", a.theory)));
            }
            if a.kind == AgentKind::External && a.command.is_empty() {
                return Err(ArenaError::config("agents", format!("external agent {} has no command", a.agent_id)));
            }
            if a.top_k == 0 {
                return Err(ArenaError::config("agents", format!("{} has top_k = 0", a.agent_id)));
            }
        }
        if covered.len() != names.len() {
            return Err(ArenaError::config("agents", "every theory needs exactly one agent"));
        }
        Ok(())
    }
}

/// Ground-truth parameters used when a theory generates the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fiducials {
    pub gcm_c: f64,
    /// Attention weights; empty means uniform.
    pub gcm_weights: Vec<f64>,
    pub rulex: RulexParams,
    pub sustain: SustainParams,
}

impl Default for Fiducials {
    fn default() -> Self {
        Fiducials {
            gcm_c: 4.0,
            gcm_weights: Vec::new(),
            rulex: RulexParams::new(0.95, 0.95),
            sustain: SustainParams::new(6.0, 4.0, 8.0, 0.1),
        }
    }
}

impl Fiducials {
    pub fn params(&self, kind: ModelKind, dims: usize) -> ParameterVector {
        match kind {
            ModelKind::Gcm if self.gcm_weights.is_empty() => ParameterVector::Gcm(GcmParams::uniform(self.gcm_c, dims)),
            ModelKind::Gcm => ParameterVector::Gcm(GcmParams::new(self.gcm_c, self.gcm_weights.clone())),
            ModelKind::Rulex => ParameterVector::Rulex(self.rulex.clone()),
            ModelKind::Sustain => ParameterVector::Sustain(self.sustain.clone()),
        }
    }
}

/// Initial particle lattice of a theory, uniformly weighted.
///
/// GCM: c ∈ {1, 4, 16} × (uniform attention, or 0.6 on one dimension).
/// RULEX: γ_r, γ_x ∈ {0.6, 0.8, 0.95, 0.99}.
/// SUSTAIN: r ∈ {2, 6, 18} × d ∈ {3, 8, 20} × η ∈ {0.03, 0.1, 0.3}, β = 4.
pub fn initial_family(kind: ModelKind, dims: usize) -> Result<TheoryFamily> {
    let params: Vec<ParameterVector> = match kind {
        ModelKind::Gcm => {
            let mut attention = vec![vec![1.0 / dims as f64; dims]];
            if dims > 1 {
                for k in 0..dims {
                    let rest = 0.4 / (dims - 1) as f64;
                    attention.push((0..dims).map(|j| if j == k { 0.6 } else { rest }).collect());
                }
            }
            [1.0, 4.0, 16.0]
                .iter()
                .flat_map(|&c| {
                    attention
                        .iter()
                        .map(move |w| ParameterVector::Gcm(GcmParams::new(c, w.clone())))
                })
                .collect()
        }
        ModelKind::Rulex => {
            let g = [0.6, 0.8, 0.95, 0.99];
            g.iter()
                .flat_map(|&r| g.iter().map(move |&x| ParameterVector::Rulex(RulexParams::new(r, x))))
                .collect()
        }
        ModelKind::Sustain => {
            let mut out = Vec::new();
            for r in [2.0, 6.0, 18.0] {
                for d in [3.0, 8.0, 20.0] {
                    for eta in [0.03, 0.1, 0.3] {
                        out.push(ParameterVector::Sustain(SustainParams::new(r, 4.0, d, eta)));
                    }
                }
            }
            out
        }
    };
    TheoryFamily::uniform(kind.as_str(), params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentDefaults {
    pub kind: AgentKind,
    pub top_k: usize,
    pub perturbation_scale: f64,
}

impl Default for AgentDefaults {
    fn default() -> Self {
        AgentDefaults {
            kind: AgentKind::ScriptedMaxdiv,
            top_k: 27,
            perturbation_scale: 0.15,
        }
    }
}

pub fn default_agents(theories: &[TheoryFamily], defaults: &AgentDefaults) -> Vec<AgentDescriptor> {
    theories
        .iter()
        .map(|t| {
            let mut a = AgentDescriptor::scripted(format!("agent-{}", t.name.to_ascii_lowercase()), &t.name, defaults.kind);
            a.top_k = defaults.top_k;
            a.perturbation_scale = defaults.perturbation_scale;
            a
        })
        .collect()
}

/// Recovery-study grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub truths: Vec<ModelKind>,
    pub epsilons: Vec<f64>,
    pub replications: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            truths: ModelKind::ALL.to_vec(),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            replications: 10,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.truths.is_empty() {
            return Err(ArenaError::config("study.truths", "at least one truth is required"));
        }
        if self.replications == 0 {
            return Err(ArenaError::config("study.replications", "must be at least 1"));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(ArenaError::config("study.epsilons", format!("{e} not in [0, 1]")));
        }
        if self.epsilons.is_empty() {
            return Err(ArenaError::config("study.epsilons", "at least one lapse rate is required"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSection {
    pub theory: ModelKind,
    pub epsilon: f64,
}

impl Default for TruthSection {
    fn default() -> Self {
        TruthSection {
            theory: ModelKind::Gcm,
            epsilon: 0.0,
        }
    }
}

/// On-disk configuration. Every field is optional and falls back to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub master_seed: u64,
    pub cycles: usize,
    pub seed_pool_budget: usize,
    pub proposals_per_agent: usize,
    pub stop_threshold: f64,
    pub divergence_top_n: usize,
    pub space: StimulusSpace,
    pub truth: TruthSection,
    pub theories: Vec<ModelKind>,
    pub eig: EigSection,
    pub fiducials: Fiducials,
    pub agent_defaults: AgentDefaults,
    /// Explicit agents; when empty one agent per theory is created from `agent_defaults`.
    pub agents: Vec<AgentDescriptor>,
    pub study: StudyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigSection {
    pub mc_samples: usize,
    pub exact_cutoff: u64,
}

impl Default for EigSection {
    fn default() -> Self {
        let s = EigSettings::default();
        EigSection {
            mc_samples: s.mc_samples,
            exact_cutoff: s.exact_cutoff,
        }
    }
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            master_seed: 1,
            cycles: 5,
            seed_pool_budget: 64,
            proposals_per_agent: 3,
            stop_threshold: 0.95,
            divergence_top_n: DEFAULT_TOP_N,
            space: StimulusSpace::default(),
            truth: TruthSection::default(),
            theories: ModelKind::ALL.to_vec(),
            eig: EigSection::default(),
            fiducials: Fiducials::default(),
            agent_defaults: AgentDefaults::default(),
            agents: Vec::new(),
            study: StudyConfig::default(),
        }
    }
}

impl FileConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            // toml reports unknown/missing keys as "... field `name` ..."
            let field = msg
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".to_string());
            ArenaError::config(field, msg)
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ArenaError::Config {
            path: path.display().to_string(),
            field: "<file>".into(),
            reason: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| e.at_path(&path.display().to_string()))
    }

    /// Builds and validates the run for the given truth and lapse rate.
    pub fn run_config_for(&self, truth: ModelKind, epsilon: f64, master_seed: u64) -> Result<RunConfig> {
        if self.cycles == 0 {
            return Err(ArenaError::config("cycles", "must be at least 1"));
        }
        self.space.validate()?;
        if let Err(e) = self.fiducials.params(truth, self.space.dims).validate() {
            return Err(ArenaError::config("fiducials", e.to_string()));
        }
        let theories = self
            .theories
            .iter()
            .map(|&k| initial_family(k, self.space.dims))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| ArenaError::config("theories", e.to_string()))?;
        let agents = if self.agents.is_empty() {
            default_agents(&theories, &self.agent_defaults)
        } else {
            self.agents.clone()
        };
        let truth = GroundTruth {
            params: self.fiducials.params(truth, self.space.dims),
            epsilon,
            theory: None,
        };
        let cfg = RunConfig {
            space: self.space.clone(),
            truth,
            agents,
            theories,
            cycles: self.cycles,
            seed_pool_budget: self.seed_pool_budget,
            proposals_per_agent: self.proposals_per_agent,
            stop_threshold: self.stop_threshold,
            master_seed,
            mc_samples: self.eig.mc_samples,
            exact_cutoff: self.eig.exact_cutoff,
            divergence_top_n: self.divergence_top_n,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        self.run_config_for(self.truth.theory, self.truth.epsilon, self.master_seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_is_valid() {
        for k in ModelKind::ALL {
            RunConfig::default_for(k, 0.2, 3).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn grids_have_nine_to_twenty_seven_particles() {
        for k in ModelKind::ALL {
            let n = initial_family(k, 3).unwrap().particles.len();
            assert!((9..=27).contains(&n), "{k}: {n}");
        }
    }

    #[test]
    fn fiducials_lie_on_their_grids() {
        let f = Fiducials::default();
        for k in ModelKind::ALL {
            let fam = initial_family(k, 3).unwrap();
            let truth = f.params(k, 3);
            assert!(fam.particles.iter().any(|p| p.params == truth), "{k}");
        }
    }

    #[test]
    fn zero_cycles_names_the_field() {
        let cfg = FileConfig::from_toml_str("cycles = 0").unwrap();
        match cfg.run_config() {
            Err(ArenaError::Config { field, .. }) => assert_eq!(field, "cycles"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_reported() {
        match FileConfig::from_toml_str("cylces = 3") {
            Err(ArenaError::Config { field, .. }) => assert_eq!(field, "cylces"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_threshold_and_agents() {
        let mut cfg = RunConfig::default_for(ModelKind::Gcm, 0.0, 1).unwrap();
        cfg.stop_threshold = 0.5;
        assert!(matches!(cfg.validate(), Err(ArenaError::Config { field, .. }) if field == "stop_threshold"));
        let mut cfg = RunConfig::default_for(ModelKind::Gcm, 0.0, 1).unwrap();
        cfg.agents.pop();
        assert!(matches!(cfg.validate(), Err(ArenaError::Config { field, .. }) if field == "agents"));
    }

    #[test]
    fn toml_sections_parse() {
        let cfg = FileConfig::from_toml_str(
            r#"
            master_seed = 9
            [truth]
            theory = "SUSTAIN"
            epsilon = 0.1
            [study]
            truths = ["GCM", "RULEX"]
            replications = 2
            "#,
        )
        .unwrap();
        let run = cfg.run_config().unwrap();
        assert_eq!(run.truth.theory_name(), "SUSTAIN");
        assert_eq!(run.master_seed, 9);
        assert_eq!(cfg.study.epsilons, DEFAULT_EPSILONS.to_vec());
    }
}
