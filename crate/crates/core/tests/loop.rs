use std::collections::HashSet;

use theory_arena::adjudication::{Posterior, TheoryFamily};
use theory_arena::agents::{AgentDescriptor, AgentKind};
use theory_arena::config::{FileConfig, RunConfig};
use theory_arena::debate::{replay_posteriors, run_adjudication, DebateTrace};
use theory_arena::models::ModelKind;

fn default_run(truth: ModelKind, eps: f64, seed: u64) -> DebateTrace {
    run_adjudication(&RunConfig::default_for(truth, eps, seed).unwrap()).unwrap()
}

/// Posterior after each cycle, recomputed from the recorded particles and
/// datasets with plain multinomial arithmetic.
fn offline_posteriors(trace: &DebateTrace) -> Vec<Posterior> {
    let names: Vec<String> = trace.cycles[0].theories.iter().map(|t| t.name.clone()).collect();
    let mut log_prior: Vec<f64> = vec![(1.0 / names.len() as f64).ln(); names.len()];
    let mut out = Vec::new();
    for c in &trace.cycles {
        let log_mass: Vec<f64> = c
            .theories
            .iter()
            .zip(&log_prior)
            .map(|(t, lp)| {
                let terms: Vec<f64> = t
                    .particles
                    .iter()
                    .map(|p| {
                        let prof = p.params.predict(&c.selected).unwrap();
                        let ll: f64 = prof
                            .items
                            .iter()
                            .zip(&c.data.items)
                            .flat_map(|(probs, obs)| {
                                let k = probs.len() as f64;
                                probs.iter().zip(&obs.counts).map(move |(&q, &n)| {
                                    let q = (1.0 - trace.epsilon) * q + trace.epsilon / k;
                                    if n == 0 { 0.0 } else { n as f64 * q.ln() }
                                })
                            })
                            .sum();
                        p.weight.ln() + ll
                    })
                    .collect();
                let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                lp + top + terms.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
            })
            .collect();
        let top = log_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = log_mass.iter().map(|x| (x - top).exp()).sum();
        let post: Vec<f64> = log_mass.iter().map(|x| (x - top).exp() / z).collect();
        log_prior = post.iter().map(|p| p.ln()).collect();
        out.push(Posterior(names.iter().cloned().zip(post).collect()));
    }
    out
}

fn assert_close(a: &Posterior, b: &Posterior, tol: f64) {
    for (k, v) in &a.0 {
        let w = b.get(k).unwrap();
        assert!((v - w).abs() <= tol, "{k}: {v} vs {w}");
    }
}

#[test]
fn noiseless_gcm_is_recovered_and_replays() {
    let trace = default_run(ModelKind::Gcm, 0.0, 1);
    assert!(trace.verdict.recovered);
    assert!(trace.verdict.margin > 0.5, "margin {}", trace.verdict.margin);
    assert_eq!(trace.verdict.winner, "GCM");

    let offline = offline_posteriors(&trace);
    let replayed = replay_posteriors(&trace).unwrap();
    for ((c, o), r) in trace.cycles.iter().zip(&offline).zip(&replayed) {
        assert_close(&c.posterior_after, o, 1e-9);
        assert_close(&c.posterior_after, r, 1e-9);
        assert!(c.posterior_before.is_normalized() && c.posterior_after.is_normalized());
    }
    assert_close(&trace.final_posterior, offline.last().unwrap(), 1e-9);
}

#[test]
fn traces_are_byte_identical() {
    for (truth, eps) in [(ModelKind::Sustain, 0.2), (ModelKind::Rulex, 0.0)] {
        let a = serde_json::to_string(&default_run(truth, eps, 21)).unwrap();
        let b = serde_json::to_string(&default_run(truth, eps, 21)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn cycle_invariants() {
    for (truth, eps, seed) in [(ModelKind::Rulex, 0.1, 4), (ModelKind::Sustain, 0.4, 5), (ModelKind::Gcm, 0.2, 6)] {
        let cfg = RunConfig::default_for(truth, eps, seed).unwrap();
        let trace = run_adjudication(&cfg).unwrap();
        assert_eq!(trace.cycles.len(), trace.cycles_executed);
        assert!((1..=cfg.cycles).contains(&trace.cycles_executed));
        let mut run = HashSet::new();
        for (i, c) in trace.cycles.iter().enumerate() {
            assert_eq!(c.cycle, i + 1);
            assert!(run.insert(c.selected.content_key()), "{} executed twice", c.selected.id);
            let reached = c.posterior_after.argmax().unwrap().1 >= cfg.stop_threshold;
            if i + 1 < trace.cycles.len() {
                assert!(!reached, "cycle {} reached the threshold but the run went on", c.cycle);
            } else if trace.cycles_executed < cfg.cycles {
                assert!(reached);
            }
            if i > 0 {
                assert_eq!(c.posterior_before, trace.cycles[i - 1].posterior_after);
            }
            assert_eq!(c.selected_eig.design_id, c.selected.id);
            let best = c.eig_table.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(c.selected_eig.value, best);
            assert_eq!(c.data.total_trials(), c.selected.test.len() as u64 * c.selected.trials_per_item as u64);
        }
    }
}

#[test]
fn identical_theories_stay_uniform() {
    let mut cfg = RunConfig::default_for(ModelKind::Gcm, 0.1, 2).unwrap();
    let gcm = cfg.theories[0].clone();
    cfg.theories = vec![gcm.clone(), TheoryFamily { name: "GCM-twin".into(), ..gcm }];
    cfg.agents = ["GCM", "GCM-twin"]
        .iter()
        .map(|t| {
            let mut a = AgentDescriptor::scripted(format!("agent-{t}"), *t, AgentKind::ScriptedMaxdiv);
            a.perturbation_scale = 0.0;
            a
        })
        .collect();
    let trace = run_adjudication(&cfg).unwrap();
    assert_eq!(trace.cycles_executed, cfg.cycles);
    for c in &trace.cycles {
        assert!((c.posterior_after.get("GCM").unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(c.selected_eig.value, 0.0);
    }
    assert!(trace.verdict.margin.abs() < 1e-12);
    assert!(!trace.verdict.recovered);
}

#[test]
fn small_pool_runs_out() {
    let mut cfg = RunConfig::default_for(ModelKind::Rulex, 1.0, 8).unwrap();
    cfg.seed_pool_budget = 1;
    cfg.agents.iter_mut().for_each(|a| a.kind = AgentKind::ScriptedMaxdiv);
    cfg.proposals_per_agent = 0;
    cfg.cycles = 4;
    let trace = run_adjudication(&cfg).unwrap();
    assert_eq!(trace.cycles_executed, 1);
    // pure lapse: nothing is learned
    assert_close(&trace.final_posterior, &Posterior::uniform(["GCM", "RULEX", "SUSTAIN"]), 1e-12);
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let mut cfg = RunConfig::default_for(ModelKind::Gcm, 0.0, 1).unwrap();
    cfg.cycles = 0;
    let err = run_adjudication(&cfg).unwrap_err();
    assert_eq!(err.code(), "CONFIG");
    assert!(err.to_string().contains("cycles"));
}

#[test]
fn file_config_defaults_match_run_defaults() {
    let file = FileConfig::default();
    let run = file.run_config().unwrap();
    let direct = RunConfig::default_for(file.truth.theory, file.truth.epsilon, file.master_seed).unwrap();
    assert_eq!(run, direct);
}
