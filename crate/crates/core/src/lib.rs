//! Closed-loop adjudication between competing categorization theories.
//!
//! Theory agents register exemplar (GCM), rule-plus-exception (RULEX) and
//! clustering (SUSTAIN) models, propose experiments guided by where the
//! models disagree, and the most informative proposal (by expected
//! information gain) is run against a synthetic participant. Beliefs over
//! theories and their parameter particles are updated by Bayes after every
//! cycle. [`study::run_recovery_study`] repeats the loop across ground truths
//! and lapse rates to measure how reliably the generating theory is recovered.

pub mod adjudication;
pub mod agents;
pub mod cli;
pub mod config;
pub mod debate;
pub mod design_engine;
pub mod error;
pub mod models;
pub mod oracle;
pub mod report;
pub mod rng;
pub mod stimulus;
pub mod study;

pub use error::{ArenaError, Result};
