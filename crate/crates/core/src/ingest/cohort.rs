use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metadata::RecordMeta;
use crate::error::{Error, Result};

pub const CODE_RVH: &str = "RVH";
pub const CODE_RAE: &str = "RAO/RAE";
pub const CODE_NORM: &str = "NORM";

/// Rhythm statements that may accompany NORM without disqualifying a control.
const NEUTRAL_RHYTHM: [&str; 1] = ["SR"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlPolicy {
    /// NORM-only records, seeded sample matched to the positive count.
    NormMatched,
    /// Every NORM-only record.
    NormAll,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortConfig {
    pub positive_codes: BTreeSet<String>,
    /// A code qualifies at or above this likelihood, or when recorded as 0.
    pub likelihood_threshold: f64,
    pub control_policy: ControlPolicy,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            positive_codes: [CODE_RVH, CODE_RAE].iter().map(|s| s.to_string()).collect(),
            likelihood_threshold: 50.0,
            control_policy: ControlPolicy::NormMatched,
        }
    }
}

/// Per-condition labels of a cohort member.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubLabels {
    pub rvh: bool,
    pub rae: bool,
}

impl SubLabels {
    pub fn any(self) -> bool {
        self.rvh || self.rae
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortCatalog {
    pub entries: Vec<RecordMeta>,
    pub positive_ids: BTreeSet<String>,
    pub control_ids: BTreeSet<String>,
    sub_labels: HashMap<String, SubLabels>,
}

impl CohortCatalog {
    pub fn is_member(&self, id: &str) -> bool {
        self.positive_ids.contains(id) || self.control_ids.contains(id)
    }

    pub fn label(&self, id: &str) -> bool {
        self.positive_ids.contains(id)
    }

    pub fn sub_labels(&self, id: &str) -> SubLabels {
        self.sub_labels.get(id).copied().unwrap_or_default()
    }

    pub fn meta(&self, id: &str) -> Option<&RecordMeta> {
        self.entries.iter().find(|m| m.record_id == id)
    }

    /// Cohort member ids, positives first, each group sorted.
    pub fn member_ids(&self) -> Vec<String> {
        self.positive_ids
            .iter()
            .chain(&self.control_ids)
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.positive_ids.len() + self.control_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn qualifies(meta: &RecordMeta, code: &str, threshold: f64) -> bool {
    meta.scp_codes
        .get(code)
        .is_some_and(|&l| l >= threshold || l == 0.0)
}

fn is_norm_only(meta: &RecordMeta, threshold: f64) -> bool {
    qualifies(meta, CODE_NORM, threshold)
        && meta
            .scp_codes
            .keys()
            .all(|c| c == CODE_NORM || NEUTRAL_RHYTHM.contains(&c.as_str()))
}

/// Splits the catalog into positives (any qualifying positive code) and controls.
/// Deterministic for a fixed seed.
pub fn select_cohort(meta: &[RecordMeta], config: &CohortConfig, seed: u64) -> Result<CohortCatalog> {
    if config.positive_codes.is_empty() {
        return Err(Error::Config("positive code set is empty".into()));
    }
    if let Some(c) = config
        .positive_codes
        .iter()
        .find(|c| c.as_str() != CODE_RVH && c.as_str() != CODE_RAE)
    {
        return Err(Error::Config(format!(
            "positive code `{c}` is not one of {CODE_RVH}, {CODE_RAE}"
        )));
    }
    if !(0.0..=100.0).contains(&config.likelihood_threshold) {
        return Err(Error::Config(format!(
            "likelihood threshold {} outside [0, 100]",
            config.likelihood_threshold
        )));
    }

    let t = config.likelihood_threshold;
    let mut positive_ids = BTreeSet::new();
    let mut sub_labels = HashMap::new();
    for m in meta {
        let labels = SubLabels {
            rvh: config.positive_codes.contains(CODE_RVH) && qualifies(m, CODE_RVH, t),
            rae: config.positive_codes.contains(CODE_RAE) && qualifies(m, CODE_RAE, t),
        };
        if labels.any() {
            positive_ids.insert(m.record_id.clone());
            sub_labels.insert(m.record_id.clone(), labels);
        }
    }
    if positive_ids.is_empty() {
        return Err(Error::EmptyCohort);
    }

    let mut candidates: Vec<&str> = meta
        .iter()
        .filter(|m| !positive_ids.contains(&m.record_id) && is_norm_only(m, t))
        .map(|m| m.record_id.as_str())
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let control_ids: BTreeSet<String> = match config.control_policy {
        ControlPolicy::NormAll => candidates.iter().map(|s| s.to_string()).collect(),
        ControlPolicy::NormMatched => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates.shuffle(&mut rng);
            candidates
                .into_iter()
                .take(positive_ids.len())
                .map(str::to_string)
                .collect()
        }
    };

    Ok(CohortCatalog {
        entries: meta.to_vec(),
        positive_ids,
        control_ids,
        sub_labels,
    })
}
