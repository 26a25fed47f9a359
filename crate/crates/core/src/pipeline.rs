//! End-to-end glue: cohort records → split → normalization → examples → training → report.

use std::collections::HashMap;

use crate::dnn::{train, Dataset, Mlp, Preprocessing, TrainConfig, TrainHistory};
use crate::error::{Error, Result};
use crate::ingest::{select_cohort, CohortCatalog, CohortConfig, ControlPolicy, EcgRecord};
use crate::metrics::EvalReport;
use crate::preprocess::{compute_norm_stats, make_examples, split, split_three, DatasetSplit, LabeledExample, NormStats};
use crate::scalar::Scalar;
use crate::synth::generate_training_set;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.75;
/// Share of the training part held out for per-epoch validation.
pub const DEFAULT_VAL_FRACTION: f64 = 0.2;
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 64];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Global normalization statistics and validation ≡ test.
    pub paper_faithful: bool,
    pub include_demographics: bool,
    /// Two outputs (RVH, RAE) instead of one "PH present" probability.
    pub per_condition: bool,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            train_fraction: DEFAULT_TRAIN_FRACTION,
            val_fraction: DEFAULT_VAL_FRACTION,
            paper_faithful: false,
            include_demographics: false,
            per_condition: false,
            hidden: DEFAULT_HIDDEN.to_vec(),
            seed: 0,
        }
    }
}

/// Examples for every cohort record plus the split and the fitted statistics.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    pub split: DatasetSplit,
    pub stats: NormStats<T>,
    pub sampling_rate: u32,
    pub include_demographics: bool,
    examples: Vec<LabeledExample<T>>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> Prepared<T> {
    pub fn examples(&self) -> &[LabeledExample<T>] {
        &self.examples
    }

    pub fn subset(&self, ids: &[String]) -> Result<Vec<&LabeledExample<T>>> {
        ids.iter()
            .map(|id| {
                self.index
                    .get(id)
                    .map(|&i| &self.examples[i])
                    .ok_or_else(|| Error::Config(format!("split references unknown record {id}")))
            })
            .collect()
    }

    pub fn dataset(&self, ids: &[String], per_condition: bool) -> Result<Dataset<T>> {
        Dataset::from_examples(&self.subset(ids)?, per_condition)
    }

    pub fn preprocessing(&self) -> Preprocessing<T> {
        Preprocessing {
            sampling_rate: self.sampling_rate,
            include_demographics: self.include_demographics,
            stats: self.stats.clone(),
        }
    }
}

/// Splits cohort members, fits statistics (train only unless paper-faithful) and
/// builds examples. `records` may hold non-members; they are ignored.
pub fn prepare<T: Scalar>(
    records: &[EcgRecord<T>],
    catalog: &CohortCatalog,
    opts: &PipelineOptions,
) -> Result<Prepared<T>> {
    let (members, split) = members_and_split(records, catalog, opts)?;
    let by_id: HashMap<&str, &EcgRecord<T>> = members.iter().map(|r| (r.record_id(), r)).collect();
    let fit_ids: Vec<&str> = if opts.paper_faithful {
        members.iter().map(|r| r.record_id()).collect()
    } else {
        split.train_ids.iter().map(String::as_str).collect()
    };
    let mut stats = compute_norm_stats(fit_ids.iter().map(|id| by_id[id]))?;
    if opts.include_demographics {
        stats = stats.with_demographics(fit_ids.iter().filter_map(|id| catalog.meta(id)));
    }
    let pre = Preprocessing { sampling_rate: members[0].sampling_rate(), include_demographics: opts.include_demographics, stats };
    assemble(&members, catalog, split, pre)
}

/// Same split as [`prepare`], but with statistics taken from a saved model instead of refitted.
pub fn prepare_with<T: Scalar>(
    records: &[EcgRecord<T>],
    catalog: &CohortCatalog,
    opts: &PipelineOptions,
    pre: &Preprocessing<T>,
) -> Result<Prepared<T>> {
    let (members, split) = members_and_split(records, catalog, opts)?;
    if members[0].sampling_rate() != pre.sampling_rate {
        return Err(Error::Shape(format!(
            "records are sampled at {} Hz, the model expects {}",
            members[0].sampling_rate(),
            pre.sampling_rate
        )));
    }
    assemble(&members, catalog, split, pre.clone())
}

fn members_and_split<T: Scalar>(
    records: &[EcgRecord<T>],
    catalog: &CohortCatalog,
    opts: &PipelineOptions,
) -> Result<(Vec<EcgRecord<T>>, DatasetSplit)> {
    let members: Vec<EcgRecord<T>> = records.iter().filter(|r| catalog.is_member(r.record_id())).cloned().collect();
    if members.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let sampling_rate = members[0].sampling_rate();
    if let Some(r) = members.iter().find(|r| r.sampling_rate() != sampling_rate) {
        return Err(Error::Shape(format!(
            "record {} is sampled at {} Hz, expected {sampling_rate}",
            r.record_id(),
            r.sampling_rate()
        )));
    }
    let ids: Vec<String> = members.iter().map(|r| r.record_id().to_string()).collect();
    let split = if opts.paper_faithful {
        split(&ids, opts.train_fraction, opts.seed)?
    } else {
        split_three(&ids, opts.train_fraction, opts.val_fraction, opts.seed)?
    };
    Ok((members, split))
}

fn assemble<T: Scalar>(
    members: &[EcgRecord<T>],
    catalog: &CohortCatalog,
    split: DatasetSplit,
    pre: Preprocessing<T>,
) -> Result<Prepared<T>> {
    let examples = make_examples(members, catalog, &pre.stats, pre.include_demographics)?;
    let index = examples.iter().enumerate().map(|(i, e)| (e.record_id.clone(), i)).collect();
    Ok(Prepared {
        split,
        stats: pre.stats,
        sampling_rate: pre.sampling_rate,
        include_demographics: pre.include_demographics,
        examples,
        index,
    })
}

/// Balanced synthetic records and a catalog whose labels follow the planted flags.
pub fn synthetic_cohort<T: Scalar>(n: usize, class_margin: f64, seed: u64) -> Result<(Vec<EcgRecord<T>>, CohortCatalog)> {
    let set = generate_training_set::<T>(n, class_margin, seed)?;
    let metas: Vec<_> = set.iter().map(|s| s.meta(s.record.record_id())).collect();
    let cfg = CohortConfig { control_policy: ControlPolicy::NormAll, ..CohortConfig::default() };
    let catalog = select_cohort(&metas, &cfg, seed)?;
    Ok((set.into_iter().map(|s| s.record).collect(), catalog))
}

#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub model: Mlp<T>,
    pub history: TrainHistory,
    /// Held-out test split, scored on the first output.
    pub report: EvalReport,
}

pub fn layer_sizes(input: usize, hidden: &[usize], per_condition: bool) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    sizes.push(if per_condition { 2 } else { 1 });
    sizes
}

/// Initializes from `cfg.seed`, trains, and scores the test split.
pub fn fit<T: Scalar>(prepared: &Prepared<T>, opts: &PipelineOptions, cfg: &TrainConfig) -> Result<Outcome<T>> {
    let train_set = prepared.dataset(&prepared.split.train_ids, opts.per_condition)?;
    let val_set = prepared.dataset(prepared.split.validation_ids(), opts.per_condition)?;
    let sizes = layer_sizes(train_set.inputs.ncols(), &opts.hidden, opts.per_condition);
    let model = Mlp::new(&sizes, cfg.seed)?;
    let (model, history) = train(model, &train_set, &val_set, cfg)?;
    let report = score(&model, prepared, &prepared.split.test_ids)?;
    Ok(Outcome { model, history, report })
}

/// Evaluation report for `ids` against their "PH present" labels.
pub fn score<T: Scalar>(model: &Mlp<T>, prepared: &Prepared<T>, ids: &[String]) -> Result<EvalReport> {
    let examples = prepared.subset(ids)?;
    let data = Dataset::from_examples(&examples, false)?;
    let out = model.forward(data.inputs.view())?;
    let scores: Vec<f64> = out.output().column(0).iter().map(|p| p.to_f64_lossless()).collect();
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    EvalReport::from_scores(&scores, &labels)
}
