use std::path::{Path, PathBuf};

use phscreen::ingest::{load_metadata, read_record, select_cohort, CohortCatalog, CohortConfig, LoadOptions, RecordMeta};
use phscreen::pipeline::synthetic_cohort;
use phscreen::{Error, Record, Result};
use rayon::prelude::*;

use crate::args::Source;

pub const METADATA_FILE: &str = "ptbxl_database.csv";

pub fn dataset_root(src: &Source) -> Result<&Path> {
    src.dataset_root
        .as_deref()
        .ok_or_else(|| Error::Config("no dataset root: pass --dataset-root, set PTBXL_ROOT, or use --synthetic".into()))
}

pub fn read_metadata(src: &Source) -> Result<Vec<RecordMeta>> {
    let path = dataset_root(src)?.join(METADATA_FILE);
    let bytes = std::fs::read(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    load_metadata(&bytes, LoadOptions { lenient: src.lenient })
}

pub fn cohort_config(src: &Source) -> CohortConfig {
    CohortConfig {
        likelihood_threshold: src.likelihood_threshold,
        control_policy: src.controls.into(),
        ..CohortConfig::default()
    }
}

/// Metadata rows and the selected cohort. An empty metadata table yields `None`.
pub fn catalog(src: &Source) -> Result<Option<CohortCatalog>> {
    if src.synthetic {
        let (_, cat) = synthetic_cohort::<f64>(src.n, src.margin, src.seed)?;
        return Ok(Some(cat));
    }
    let meta = read_metadata(src)?;
    match select_cohort(&meta, &cohort_config(src), src.seed) {
        Ok(c) => Ok(Some(c)),
        Err(Error::EmptyCohort) if meta.is_empty() => Ok(None),
        Err(e) => Err(e),
    }
}

fn record_path(root: &Path, meta: &RecordMeta, rate: u32) -> Result<PathBuf> {
    let rel = meta.filename_for_rate(rate).ok_or_else(|| {
        Error::Config(format!("record {} lists no file for {rate} Hz", meta.record_id))
    })?;
    Ok(root.join(rel))
}

/// Cohort records in member order (positives, then controls), read in parallel.
pub fn cohort_records(src: &Source) -> Result<(Vec<Record>, CohortCatalog)> {
    if src.synthetic {
        if src.sampling_rate != 100 {
            return Err(Error::Config("synthetic records are generated at 100 Hz".into()));
        }
        return synthetic_cohort(src.n, src.margin, src.seed);
    }
    let root = dataset_root(src)?;
    let meta = read_metadata(src)?;
    let catalog = select_cohort(&meta, &cohort_config(src), src.seed)?;
    let members: Vec<&RecordMeta> = catalog
        .member_ids()
        .iter()
        .filter_map(|id| catalog.entries.iter().find(|m| &m.record_id == id))
        .collect();
    let records = members
        .par_iter()
        .map(|m| {
            let path = record_path(root, m, src.sampling_rate)?;
            let r: Record = read_record(&path)?;
            if r.sampling_rate() != src.sampling_rate {
                return Err(Error::Config(format!(
                    "{} is sampled at {} Hz, expected {}",
                    path.display(),
                    r.sampling_rate(),
                    src.sampling_rate
                )));
            }
            Ok(r.with_record_id(m.record_id.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, catalog))
}
