use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use phscreen::dnn::{load_model, save_model, ModelFile, Preprocessing};
use phscreen::features::{evaluate_criteria, extract_fiducials, CriteriaThresholds, DetectorConfig, MeasureConfig};
use phscreen::ingest::{read_record, write_record, CohortCatalog, RecordMeta, Sex};
use phscreen::metrics::emit_report;
use phscreen::pipeline::{fit, prepare, prepare_with, score, PipelineOptions};
use phscreen::preprocess::{cache_write, record_to_input, DatasetSplit};
use phscreen::synth::generate_training_set;
use phscreen::{Error, Real, Record};
use serde_json::json;

use crate::args::{EvalArgs, ScreenArgs, SplitArgs, TrainArgs};
use crate::data::{catalog, cohort_records, METADATA_FILE};
use crate::{CliError, CliResult, Source};

pub const MODEL_FILE: &str = "model.ecgm";
pub const CACHE_FILE: &str = "dataset.ecgp";
pub const SPLIT_FILE: &str = "split.json";

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    Ok(())
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(format!("{}: {e}", path.display()))
}

const LABEL_ROWS: [&str; 4] = ["rvh", "rae", "rvh+rae", "control"];

fn label_category(catalog: &CohortCatalog, id: &str) -> &'static str {
    let s = catalog.sub_labels(id);
    match (s.rvh, s.rae) {
        (true, false) => "rvh",
        (false, true) => "rae",
        (true, true) => "rvh+rae",
        (false, false) => "control",
    }
}

fn age_band(age: Option<f64>) -> String {
    match age {
        // PTB-XL stores ages above 89 as 300.
        Some(a) if a >= 90.0 => "90+".into(),
        Some(a) if a >= 0.0 => {
            let lo = (a / 10.0).floor() as u32 * 10;
            format!("{lo}-{}", lo + 9)
        }
        _ => "unknown".into(),
    }
}

fn sex_name(s: Sex) -> &'static str {
    match s {
        Sex::M => "male",
        Sex::F => "female",
        Sex::Unknown => "unknown",
    }
}

/// `labels.csv`, `age.csv` and `sex.csv`. Each table sums to the cohort size.
pub fn stats(src: &Source, out: &Path) -> CliResult<()> {
    let cat = catalog(src)?;
    ensure_dir(out)?;
    let ids = cat.as_ref().map(|c| c.member_ids()).unwrap_or_default();
    let meta = |id: &str| cat.as_ref().and_then(|c| c.meta(id));

    let mut labels: BTreeMap<&str, usize> = LABEL_ROWS.iter().map(|&r| (r, 0)).collect();
    let mut ages: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut sexes: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    if let Some(c) = &cat {
        for id in &ids {
            *labels.entry(label_category(c, id)).or_default() += 1;
            let positive = c.label(id);
            let bump = |slot: &mut (usize, usize)| if positive { slot.0 += 1 } else { slot.1 += 1 };
            let m = meta(id);
            bump(ages.entry(age_band(m.and_then(|m| m.age))).or_default());
            bump(sexes.entry(sex_name(m.map_or(Sex::Unknown, |m| m.sex))).or_default());
        }
    }

    let path = out.join("labels.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["category", "count"]).map_err(csv_err(&path))?;
    if cat.is_some() {
        for row in LABEL_ROWS {
            w.write_record([row, &labels[row].to_string()]).map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;

    for (name, rows) in [
        ("age.csv", ages.into_iter().collect::<Vec<_>>()),
        ("sex.csv", sexes.into_iter().map(|(k, v)| (k.to_string(), v)).collect()),
    ] {
        let path = out.join(name);
        let mut w = csv_writer(&path)?;
        let key = name.trim_end_matches(".csv");
        w.write_record([key, "positive", "control", "total"]).map_err(csv_err(&path))?;
        for (k, (p, c)) in rows {
            w.write_record([k, p.to_string(), c.to_string(), (p + c).to_string()]).map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
    }

    println!("cohort {} records", ids.len());
    for row in LABEL_ROWS {
        println!("{row:<8} {}", labels[row]);
    }
    Ok(())
}

pub fn cohort(src: &Source, out: &Path) -> CliResult<()> {
    let cat = catalog(src)?;
    ensure_dir(out)?;
    let path = out.join("cohort.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["record_id", "label", "rvh", "rae", "age", "sex"]).map_err(csv_err(&path))?;
    let mut n = 0;
    if let Some(c) = &cat {
        for id in c.member_ids() {
            let s = c.sub_labels(&id);
            let m = c.meta(&id);
            let age = m.and_then(|m| m.age).map(|a| a.to_string()).unwrap_or_default();
            let sex = sex_name(m.map_or(Sex::Unknown, |m| m.sex));
            let flag = |b: bool| if b { "1" } else { "0" };
            w.write_record([id.as_str(), flag(c.label(&id)), flag(s.rvh), flag(s.rae), &age, sex])
                .map_err(csv_err(&path))?;
            n += 1;
        }
    }
    w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
    println!("{n} records -> {}", path.display());
    Ok(())
}

fn pipeline_options(split: &SplitArgs, seed: u64) -> PipelineOptions {
    PipelineOptions {
        train_fraction: split.train_fraction,
        val_fraction: split.val_fraction,
        paper_faithful: split.paper_faithful,
        seed,
        ..PipelineOptions::default()
    }
}

fn split_json(split: &DatasetSplit) -> CliResult<String> {
    serde_json::to_string_pretty(split).map_err(|e| CliError::Output(e.to_string()))
}

pub fn split(src: &Source, out: &Path, args: &SplitArgs) -> CliResult<()> {
    let (records, catalog) = cohort_records(src)?;
    let prepared = prepare(&records, &catalog, &pipeline_options(args, src.seed))?;
    ensure_dir(out)?;
    let s = &prepared.split;
    write_file(&out.join(SPLIT_FILE), split_json(s)?)?;
    println!("train {} validation {} test {}", s.train_ids.len(), s.val_ids.len(), s.test_ids.len());
    Ok(())
}

pub fn train(src: &Source, out: &Path, args: &TrainArgs) -> CliResult<()> {
    let (records, catalog) = cohort_records(src)?;
    let opts = args.pipeline(src.seed);
    let cfg = args.train_config(src.seed);
    cfg.validate()?;
    let prepared = prepare(&records, &catalog, &opts)?;
    let outcome = fit(&prepared, &opts, &cfg)?;

    ensure_dir(out)?;
    let file = ModelFile { model: outcome.model, preprocessing: Some(prepared.preprocessing()) };
    save_model(&file, &out.join(MODEL_FILE))?;
    cache_write(prepared.examples(), &prepared.split, &out.join(CACHE_FILE))?;
    write_file(&out.join(SPLIT_FILE), split_json(&prepared.split)?)?;
    let files = emit_report(&outcome.report, &outcome.history, &out.join("train"))?;

    let h = &outcome.history;
    let best = h.best().or(h.last());
    let summary = json!({
        "epochs_run": h.len(),
        "best_epoch": h.best_epoch,
        "stopped_early": h.stopped_early,
        "train_acc": best.map(|e| e.train_acc),
        "val_acc": best.map(|e| e.val_acc),
        "val_loss": best.map(|e| e.val_loss),
        "test_accuracy": outcome.report.accuracy,
        "test_f1": outcome.report.f1,
        "test_auc": outcome.report.auc,
        "model": out.join(MODEL_FILE),
        "report": files.report_json,
    });
    println!("{summary:#}");
    Ok(())
}

pub fn eval(src: &Source, out: &Path, args: &EvalArgs) -> CliResult<()> {
    let path = args.model.clone().unwrap_or_else(|| out.join(MODEL_FILE));
    let file = load_model::<Real>(&path)?;
    let pre = require_preprocessing(&file, &path)?;
    if pre.sampling_rate != src.sampling_rate {
        return Err(CliError::Incompatible(format!(
            "model was trained on {} Hz records, --sampling-rate is {}",
            pre.sampling_rate, src.sampling_rate
        )));
    }
    let (records, catalog) = cohort_records(src)?;
    let prepared = prepare_with(&records, &catalog, &pipeline_options(&args.split, src.seed), pre)?;
    let width = prepared.examples().first().map_or(0, |e| e.input.len());
    if width != file.model.input_len() {
        return Err(CliError::Incompatible(format!(
            "records give {width} inputs, the model takes {}",
            file.model.input_len()
        )));
    }
    let report = score(&file.model, &prepared, &prepared.split.test_ids)?;
    ensure_dir(out)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
    write_file(&out.join("eval_report.json"), &text)?;
    let summary = json!({
        "n": report.n,
        "accuracy": report.accuracy,
        "f1": report.f1,
        "auc": report.auc,
        "confusion": report.confusion,
    });
    println!("{summary:#}");
    Ok(())
}

fn require_preprocessing<'a>(file: &'a ModelFile<Real>, path: &Path) -> CliResult<&'a Preprocessing<Real>> {
    file.preprocessing.as_ref().ok_or_else(|| {
        CliError::Incompatible(format!("{} carries no preprocessing parameters", path.display()))
    })
}

pub fn screen(args: &ScreenArgs) -> CliResult<()> {
    let record: Record = read_record(&args.record)?;
    let thresholds = CriteriaThresholds::from(&args.thresholds);

    let model_out = match &args.model {
        Some(path) => Some(model_output(&record, path)?),
        None => None,
    };
    let (fiducials, criteria, fiducial_error) =
        match extract_fiducials(&record, &DetectorConfig::default(), &MeasureConfig::default()) {
            Ok(f) => {
                let c = evaluate_criteria(&f, &thresholds);
                (Some(f), Some(c), None)
            }
            Err(e) => (None, None, Some(e.to_string())),
        };

    let doc = json!({
        "record": record.record_id(),
        "sampling_rate": record.sampling_rate(),
        "probability": model_out.as_ref().map(|o| o.0),
        "label": model_out.as_ref().map(|o| o.0 > phscreen::dnn::DECISION_THRESHOLD),
        "outputs": model_out.as_ref().map(|o| o.1.clone()),
        "criteria": criteria,
        "criteria_positive": criteria.map(|c| c.any_positive()),
        "fiducials": fiducials,
        "fiducial_error": fiducial_error,
    });
    println!("{doc:#}");
    Ok(())
}

/// First-output probability and every output of the saved model for one record.
fn model_output(record: &Record, path: &Path) -> CliResult<(f64, Vec<f64>)> {
    let file = load_model::<Real>(path)?;
    let pre = require_preprocessing(&file, path)?;
    if pre.sampling_rate != record.sampling_rate() {
        return Err(CliError::Incompatible(format!(
            "record is sampled at {} Hz, the model expects {}",
            record.sampling_rate(),
            pre.sampling_rate
        )));
    }
    // No catalog entry at screening time: demographics are imputed.
    let blank = RecordMeta::new(record.record_id());
    let demo = pre.include_demographics.then_some(&blank);
    let input = record_to_input(record, &pre.stats, demo).map_err(|e| CliError::Incompatible(e.to_string()))?;
    if input.len() != file.model.input_len() {
        return Err(CliError::Incompatible(format!(
            "record gives {} inputs, the model takes {}",
            input.len(),
            file.model.input_len()
        )));
    }
    let p = file.model.predict(input.view())?;
    Ok((p.probability(), p.probabilities.to_vec()))
}

/// PTB-XL style tree: `ptbxl_database.csv` plus `records100/00000/<id>_lr.{hea,dat}`.
pub fn synth(src: &Source, out: &Path) -> CliResult<()> {
    if src.sampling_rate != 100 {
        return Err(Error::Config("synthetic records are generated at 100 Hz".into()).into());
    }
    let set = generate_training_set::<Real>(src.n, src.margin, src.seed)?;
    let rel_dir = PathBuf::from("records100").join("00000");
    let dir = out.join(&rel_dir);
    ensure_dir(&dir)?;

    let path = out.join(METADATA_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(["ecg_id", "age", "sex", "height", "weight", "scp_codes", "filename_lr", "filename_hr"])
        .map_err(csv_err(&path))?;
    for s in &set {
        let id = s.record.record_id();
        let name = format!("{id}_lr");
        write_record(&s.record, &dir, &name, 1000.0)?;
        let codes: Vec<String> =
            s.meta(id).scp_codes.iter().map(|(k, v)| format!("'{k}': {v:.1}")).collect();
        let rel = rel_dir.join(&name);
        w.write_record([id, "", "", "", "", &format!("{{{}}}", codes.join(", ")), &rel.to_string_lossy(), ""])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|e| Error::Io { path: path.clone(), source: e })?;
    println!("{} records -> {}", set.len(), out.display());
    Ok(())
}
