use ndarray::Array1;

use super::norm::{normalize, normalize_demographics, NormStats, DEMOGRAPHIC_FEATURES};
use crate::error::{Error, Result};
use crate::ingest::{CohortCatalog, EcgRecord, SubLabels};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample<T> {
    pub record_id: String,
    pub input: Array1<T>,
    /// 1 = RVH or RAO/RAE present.
    pub label: bool,
    pub sub_labels: SubLabels,
}

/// Input width for `samples_per_lead` samples in each of the 12 leads.
pub fn input_len(samples_per_lead: usize, include_demographics: bool) -> usize {
    12 * samples_per_lead + if include_demographics { DEMOGRAPHIC_FEATURES } else { 0 }
}

/// Flattens one normalized record (row-major, lead by lead) plus optional demographics.
pub fn record_to_input<T: Scalar>(
    record: &EcgRecord<T>,
    stats: &NormStats<T>,
    demographics: Option<&crate::ingest::RecordMeta>,
) -> Result<Array1<T>> {
    let z = normalize(record, stats)?;
    let mut v: Vec<T> = z.iter().copied().collect();
    if let Some(meta) = demographics {
        let d = stats
            .demographics
            .as_ref()
            .ok_or_else(|| Error::Config("normalization stats lack demographic parameters".into()))?;
        v.extend(normalize_demographics(meta, d));
    }
    Ok(Array1::from(v))
}

/// Builds labeled examples in the order the records are given.
pub fn make_examples<T: Scalar>(
    records: &[EcgRecord<T>],
    catalog: &CohortCatalog,
    stats: &NormStats<T>,
    include_demographics: bool,
) -> Result<Vec<LabeledExample<T>>> {
    let n = match records.first() {
        Some(r) => r.len(),
        None => return Ok(Vec::new()),
    };
    records
        .iter()
        .map(|r| {
            if r.len() != n {
                return Err(Error::Shape(format!(
                    "record {} has {} samples per lead, expected {n}",
                    r.record_id(),
                    r.len()
                )));
            }
            let id = r.record_id();
            if !catalog.is_member(id) {
                return Err(Error::Config(format!("record {id} is not in the cohort catalog")));
            }
            let meta = if include_demographics {
                Some(
                    catalog
                        .meta(id)
                        .ok_or_else(|| Error::Config(format!("no metadata for record {id}")))?,
                )
            } else {
                None
            };
            Ok(LabeledExample {
                record_id: id.to_string(),
                input: record_to_input(r, stats, meta)?,
                label: catalog.label(id),
                sub_labels: catalog.sub_labels(id),
            })
        })
        .collect()
}
