//! Accuracy, F1, ROC/AUC, overfitting diagnostics and report files.

mod classify;
mod overfit;
mod report;
mod roc;

pub use classify::{accuracy, confusion, f1, Confusion};
pub use overfit::{overfit_check, OverfitDiagnosis, DEFAULT_GAP_THRESHOLD};
pub use report::{
    emit_report, line_plot, read_report, AccuracySummary, EvalReport, ReportDocument, ReportFiles, Series,
};
pub use roc::{roc_auc, RocPoint};
