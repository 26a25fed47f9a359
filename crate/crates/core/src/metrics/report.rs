use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::classify::{accuracy, confusion, f1, Confusion};
use super::overfit::{overfit_check, OverfitDiagnosis, DEFAULT_GAP_THRESHOLD};
use super::roc::{roc_auc, RocPoint};
use crate::dnn::{is_positive, TrainHistory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub f1: f64,
    /// `None` when the evaluated set holds a single class.
    pub auc: Option<f64>,
    pub roc_points: Vec<RocPoint>,
    pub confusion: Confusion,
}

impl EvalReport {
    /// Hard labels use the strict `p > 0.5` rule.
    pub fn from_scores(scores: &[f64], labels: &[bool]) -> Result<Self> {
        let predictions: Vec<bool> = scores.iter().map(|&p| is_positive(p)).collect();
        let confusion = confusion(&predictions, labels)?;
        let (roc_points, auc) = match roc_auc(scores, labels) {
            Ok((pts, auc)) => (pts, Some(auc)),
            Err(Error::UndefinedRoc) => (Vec::new(), None),
            Err(e) => return Err(e),
        };
        Ok(Self {
            n: labels.len(),
            accuracy: accuracy(&predictions, labels)?,
            f1: f1(&confusion),
            auc,
            roc_points,
            confusion,
        })
    }
}

/// Validation accuracy read three ways, since a single headline figure is ambiguous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub final_val_acc: f64,
    pub best_val_acc: f64,
    pub mean_val_acc: f64,
    pub final_train_acc: f64,
    /// Validation accuracy of the epoch whose parameters were kept.
    pub restored_val_acc: f64,
}

impl AccuracySummary {
    pub fn from_history(h: &TrainHistory) -> Option<Self> {
        let last = h.last()?;
        let n = h.len() as f64;
        Some(Self {
            final_val_acc: last.val_acc,
            best_val_acc: h.epochs.iter().map(|e| e.val_acc).fold(f64::NEG_INFINITY, f64::max),
            mean_val_acc: h.epochs.iter().map(|e| e.val_acc).sum::<f64>() / n,
            final_train_acc: last.train_acc,
            restored_val_acc: h.best().map_or(last.val_acc, |e| e.val_acc),
        })
    }
}

/// Everything written to the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub report: EvalReport,
    pub accuracy_summary: Option<AccuracySummary>,
    pub overfit: OverfitDiagnosis,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub report_json: PathBuf,
    pub curves_csv: PathBuf,
    pub accuracy_svg: PathBuf,
    pub loss_svg: PathBuf,
    pub roc_svg: PathBuf,
}

impl ReportFiles {
    /// `prefix` plus `_report.json`, `_curves.csv`, `_accuracy.svg`, `_loss.svg`, `_roc.svg`.
    pub fn for_prefix(prefix: &Path) -> Self {
        let with = |suffix: &str| {
            let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            name.push(suffix);
            prefix.with_file_name(name)
        };
        Self {
            report_json: with("_report.json"),
            curves_csv: with("_curves.csv"),
            accuracy_svg: with("_accuracy.svg"),
            loss_svg: with("_loss.svg"),
            roc_svg: with("_roc.svg"),
        }
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_report(report: &EvalReport, history: &TrainHistory, path_prefix: &Path) -> Result<ReportFiles> {
    let files = ReportFiles::for_prefix(path_prefix);
    let doc = ReportDocument {
        report: report.clone(),
        accuracy_summary: AccuracySummary::from_history(history),
        overfit: overfit_check(history, DEFAULT_GAP_THRESHOLD),
        epochs_run: history.len(),
        best_epoch: history.best_epoch,
        stopped_early: history.stopped_early,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    write(&files.report_json, &json)?;
    write(&files.curves_csv, &history.to_csv())?;

    let epochs = |f: fn(&crate::dnn::EpochRecord) -> f64| -> Vec<(f64, f64)> {
        history.epochs.iter().map(|e| (e.epoch as f64, f(e))).collect()
    };
    let x_max = history.len().max(1) as f64;
    write(
        &files.accuracy_svg,
        &line_plot(
            "Training and validation accuracy",
            "epoch",
            "accuracy",
            (1.0, x_max),
            (0.0, 1.0),
            &[Series::new("train", TRAIN_COLOR, epochs(|e| e.train_acc)), Series::new("validation", VAL_COLOR, epochs(|e| e.val_acc))],
        ),
    )?;
    let loss_max = history
        .epochs
        .iter()
        .flat_map(|e| [e.train_loss, e.val_loss])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-9);
    write(
        &files.loss_svg,
        &line_plot(
            "Training and validation loss",
            "epoch",
            "loss",
            (1.0, x_max),
            (0.0, loss_max * 1.05),
            &[Series::new("train", TRAIN_COLOR, epochs(|e| e.train_loss)), Series::new("validation", VAL_COLOR, epochs(|e| e.val_loss))],
        ),
    )?;
    let roc: Vec<(f64, f64)> = report.roc_points.iter().map(|p| (p.fpr, p.tpr)).collect();
    let title = match report.auc {
        Some(a) => format!("ROC (AUC {a:.3})"),
        None => "ROC (undefined: one class)".to_string(),
    };
    write(
        &files.roc_svg,
        &line_plot(&title, "false positive rate", "true positive rate", (0.0, 1.0), (0.0, 1.0), &[Series::new("roc", TRAIN_COLOR, roc)]),
    )?;
    Ok(files)
}

pub fn read_report(path: &Path) -> Result<ReportDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

const TRAIN_COLOR: &str = "#1f77b4";
const VAL_COLOR: &str = "#d62728";
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

impl<'a> Series<'a> {
    pub fn new(name: &'a str, color: &'a str, points: Vec<(f64, f64)>) -> Self {
        Self { name, color, points }
    }
}

/// Minimal SVG line chart: axes, end-point tick labels, one `<polyline>` per series.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64), series: &[Series]) -> String {
    let span = |(lo, hi): (f64, f64)| if hi > lo { hi - lo } else { 1.0 };
    let px = |v: f64| MARGIN + (v - x.0) / span(x) * (WIDTH - 2.0 * MARGIN);
    let py = |v: f64| HEIGHT - MARGIN - (v - y.0) / span(y) * (HEIGHT - 2.0 * MARGIN);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 14.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, anchor, xx) in [(x.0, "start", left), (x.1, "end", right)] {
        let _ = writeln!(s, r#"<text x="{xx}" y="{}" text-anchor="{anchor}">{}</text>"#, bottom + 16.0, tick(v));
    }
    for (v, yy) in [(y.0, bottom), (y.1, top)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, left - 6.0, yy + 4.0, tick(v));
    }
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            escape(ser.name),
            ser.color,
            pts.join(" ")
        );
        let ly = top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#, right - 110.0, right - 90.0, ser.color);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, right - 84.0, ly + 4.0, escape(ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
