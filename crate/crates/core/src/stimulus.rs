//! Binary-feature stimuli, category structures and the experiment design space.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{ArenaError, Result};

pub const MAX_DIMS: usize = 8;

/// A stimulus: an ordered vector of binary features.
///
/// The stimulus id is the feature vector read as a binary number with the
/// first feature most significant, so id order is lexicographic feature order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Stimulus {
    pub features: Vec<u8>,
}

impl Stimulus {
    pub fn new(features: Vec<u8>) -> Self {
        Stimulus { features }
    }

    pub fn from_index(index: usize, dims: usize) -> Self {
        let features = (0..dims)
            .map(|k| ((index >> (dims - 1 - k)) & 1) as u8)
            .collect();
        Stimulus { features }
    }

    pub fn id(&self) -> usize {
        self.features
            .iter()
            .fold(0usize, |acc, &f| (acc << 1) | (f as usize & 1))
    }

    pub fn dims(&self) -> usize {
        self.features.len()
    }

    /// Number of positions at which two stimuli differ.
    pub fn hamming(&self, other: &Stimulus) -> usize {
        self.features
            .iter()
            .zip(&other.features)
            .filter(|(a, b)| a != b)
            .count()
    }
}

impl fmt::Display for Stimulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.features {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingItem {
    #[serde(flatten)]
    pub stimulus: Stimulus,
    pub label: usize,
}

/// Shape of the experiment design space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusSpace {
    pub dims: usize,
    pub categories: usize,
    pub max_train_items: usize,
    pub max_test_items: usize,
    pub trials_per_test_item: u32,
}

impl Default for StimulusSpace {
    fn default() -> Self {
        StimulusSpace {
            dims: 3,
            categories: 2,
            max_train_items: 8,
            max_test_items: 8,
            trials_per_test_item: 8,
        }
    }
}

impl StimulusSpace {
    pub fn n_stimuli(&self) -> usize {
        1usize << self.dims
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(ArenaError::config(format!("space.{field}"), reason));
        if self.dims == 0 || self.dims > MAX_DIMS {
            return bad("dims", format!("{} not in [1, {MAX_DIMS}]", self.dims));
        }
        if self.categories < 2 {
            return bad("categories", format!("{} < 2", self.categories));
        }
        if self.max_train_items < self.categories || self.max_train_items > self.n_stimuli() {
            return bad(
                "max_train_items",
                format!("{} not in [{}, {}]", self.max_train_items, self.categories, self.n_stimuli()),
            );
        }
        if self.max_test_items == 0 || self.max_test_items > self.n_stimuli() {
            return bad(
                "max_test_items",
                format!("{} not in [1, {}]", self.max_test_items, self.n_stimuli()),
            );
        }
        if self.trials_per_test_item == 0 {
            return bad("trials_per_test_item", "must be positive".into());
        }
        Ok(())
    }

    /// The test set used by generated designs: the first `max_test_items` stimuli in id order.
    pub fn default_test_items(&self) -> Vec<Stimulus> {
        (0..self.max_test_items)
            .map(|i| Stimulus::from_index(i, self.dims))
            .collect()
    }
}

/// A proposed experiment: one training phase and one test phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub id: String,
    pub proposer: String,
    pub training: Vec<TrainingItem>,
    pub test: Vec<Stimulus>,
    pub trials_per_item: u32,
}

impl ExperimentDesign {
    /// Canonical text of the experimental content (everything but id and proposer).
    pub fn content_key(&self) -> String {
        let mut s = String::with_capacity(16 * (self.training.len() + self.test.len()));
        for t in &self.training {
            s.push_str(&format!("{}:{},", t.stimulus, t.label));
        }
        s.push('|');
        for t in &self.test {
            s.push_str(&format!("{t},"));
        }
        s.push_str(&format!("|{}", self.trials_per_item));
        s
    }

    pub fn dims(&self) -> usize {
        self.training
            .first()
            .map(|t| t.stimulus.dims())
            .or_else(|| self.test.first().map(Stimulus::dims))
            .unwrap_or(0)
    }

    /// Training items sorted by stimulus id (label breaks ties).
    pub fn canonical_training(&self) -> Vec<&TrainingItem> {
        let mut items: Vec<&TrainingItem> = self.training.iter().collect();
        items.sort_by(|a, b| {
            a.stimulus
                .id()
                .cmp(&b.stimulus.id())
                .then(a.label.cmp(&b.label))
        });
        items
    }

    /// Returns a copy whose labels are mapped through `perm` (label `l` becomes `perm[l]`).
    pub fn relabel(&self, perm: &[usize]) -> ExperimentDesign {
        let mut out = self.clone();
        for t in &mut out.training {
            t.label = perm[t.label];
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Violation {
    MissingCategory,
    ConflictingLabel,
    /// A feature vector, feature value or label does not conform to the space.
    DimMismatch,
    SizeExceeded,
    /// No test items, or zero trials per item.
    EmptyTestSet,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Violation::MissingCategory => "MISSING_CATEGORY",
            Violation::ConflictingLabel => "CONFLICTING_LABEL",
            Violation::DimMismatch => "DIM_MISMATCH",
            Violation::SizeExceeded => "SIZE_EXCEEDED",
            Violation::EmptyTestSet => "EMPTY_TEST_SET",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn describe(&self) -> String {
        self.violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Checks a design against the space and reports every violated rule once.
pub fn validate_design(design: &ExperimentDesign, space: &StimulusSpace) -> ValidityReport {
    let mut found = std::collections::BTreeSet::new();
    let conforms = |s: &Stimulus| s.features.len() == space.dims && s.features.iter().all(|&f| f <= 1);

    let mut seen = vec![false; space.categories];
    let mut labels: BTreeMap<&[u8], usize> = BTreeMap::new();
    for item in &design.training {
        if !conforms(&item.stimulus) || item.label >= space.categories {
            found.insert(Violation::DimMismatch);
        }
        if item.label < space.categories {
            seen[item.label] = true;
        }
        match labels.get(item.stimulus.features.as_slice()) {
            Some(&l) if l != item.label => {
                found.insert(Violation::ConflictingLabel);
            }
            Some(_) => {}
            None => {
                labels.insert(&item.stimulus.features, item.label);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        found.insert(Violation::MissingCategory);
    }
    if design.test.iter().any(|s| !conforms(s)) {
        found.insert(Violation::DimMismatch);
    }
    if design.training.len() > space.max_train_items || design.test.len() > space.max_test_items {
        found.insert(Violation::SizeExceeded);
    }
    if design.test.is_empty() || design.trials_per_item == 0 {
        found.insert(Violation::EmptyTestSet);
    }
    let violations: Vec<Violation> = found.into_iter().collect();
    ValidityReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// Enumerates up to `budget` valid designs in canonical order.
///
/// Training sets are the sorted id sequences of the stimuli, visited in
/// lexicographic order; within a set, label assignments are visited in
/// lexicographic order (first item most significant). Assignments that leave
/// a category empty are skipped. Every design tests the space's default test set.
pub fn enumerate_designs(space: &StimulusSpace, budget: usize) -> Result<Vec<ExperimentDesign>> {
    if budget == 0 {
        return Err(ArenaError::InvalidBudget);
    }
    space
        .validate()
        .map_err(|e| ArenaError::InvalidSpace(e.to_string()))?;
    let mut out = Vec::with_capacity(budget);
    let test = space.default_test_items();
    let mut prefix = Vec::with_capacity(space.max_train_items);
    enumerate_sets(space, &test, &mut prefix, 0, budget, &mut out);
    Ok(out)
}

fn enumerate_sets(
    space: &StimulusSpace,
    test: &[Stimulus],
    prefix: &mut Vec<usize>,
    next: usize,
    budget: usize,
    out: &mut Vec<ExperimentDesign>,
) {
    if out.len() >= budget {
        return;
    }
    if prefix.len() >= space.categories {
        emit_labelings(space, test, prefix, budget, out);
    }
    if prefix.len() == space.max_train_items {
        return;
    }
    for idx in next..space.n_stimuli() {
        if out.len() >= budget {
            return;
        }
        prefix.push(idx);
        enumerate_sets(space, test, prefix, idx + 1, budget, out);
        prefix.pop();
    }
}

fn emit_labelings(
    space: &StimulusSpace,
    test: &[Stimulus],
    set: &[usize],
    budget: usize,
    out: &mut Vec<ExperimentDesign>,
) {
    let k = space.categories;
    let mut labels = vec![0usize; set.len()];
    loop {
        let mut present = vec![false; k];
        for &l in &labels {
            present[l] = true;
        }
        if present.iter().all(|&p| p) {
            let n = out.len();
            out.push(ExperimentDesign {
                id: format!("seed-{n:04}"),
                proposer: "seed-pool".into(),
                training: set
                    .iter()
                    .zip(&labels)
                    .map(|(&i, &label)| TrainingItem {
                        stimulus: Stimulus::from_index(i, space.dims),
                        label,
                    })
                    .collect(),
                test: test.to_vec(),
                trials_per_item: space.trials_per_test_item,
            });
            if out.len() >= budget {
                return;
            }
        }
        // odometer increment, last position fastest
        let mut pos = labels.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
        }
    }
}

/// Category sets of the six Shepard–Hovland–Jenkins structures, as ids of the
/// stimuli in category A (label 0). Ids read features as `f1 f2 f3`.
const SHJ_CATEGORY_A: [[usize; 4]; 6] = [
    [0b000, 0b001, 0b010, 0b011], // I: f1 alone
    [0b000, 0b001, 0b110, 0b111], // II: f1 xor f2
    [0b000, 0b001, 0b010, 0b101], // III
    [0b000, 0b001, 0b010, 0b100], // IV: family resemblance around 000
    [0b000, 0b001, 0b010, 0b111], // V: f1 rule, one exception per category
    [0b000, 0b011, 0b101, 0b110], // VI: parity
];

/// One of the six classic three-dimensional category structures, trained on
/// all eight stimuli and tested on the same eight.
pub fn shj_fixture(kind: u8) -> Result<ExperimentDesign> {
    if !(1..=6).contains(&kind) {
        return Err(ArenaError::InvalidType(kind));
    }
    let a = &SHJ_CATEGORY_A[kind as usize - 1];
    let stimuli: Vec<Stimulus> = (0..8).map(|i| Stimulus::from_index(i, 3)).collect();
    Ok(ExperimentDesign {
        id: format!("shj-{kind}"),
        proposer: "fixture".into(),
        training: stimuli
            .iter()
            .map(|s| TrainingItem {
                stimulus: s.clone(),
                label: usize::from(!a.contains(&s.id())),
            })
            .collect(),
        test: stimuli,
        trials_per_item: StimulusSpace::default().trials_per_test_item,
    })
}
