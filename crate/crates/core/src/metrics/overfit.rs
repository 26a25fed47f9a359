use serde::{Deserialize, Serialize};

use crate::dnn::TrainHistory;

pub const DEFAULT_GAP_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitDiagnosis {
    pub flagged: bool,
    /// Final `train_acc - val_acc`.
    pub accuracy_gap: f64,
    pub gap_exceeded: bool,
    /// Validation loss rose over the last quartile of epochs while training loss fell.
    pub diverging_losses: bool,
}

/// Needs at least two epochs; a single epoch is never flagged.
pub fn overfit_check(history: &TrainHistory, gap_threshold: f64) -> OverfitDiagnosis {
    let e = &history.epochs;
    let Some(last) = e.last() else {
        return OverfitDiagnosis { flagged: false, accuracy_gap: 0.0, gap_exceeded: false, diverging_losses: false };
    };
    let accuracy_gap = last.train_acc - last.val_acc;
    if e.len() < 2 {
        return OverfitDiagnosis { flagged: false, accuracy_gap, gap_exceeded: false, diverging_losses: false };
    }
    let gap_exceeded = accuracy_gap > gap_threshold;
    let span = e.len().div_ceil(4);
    let start = &e[e.len() - 1 - span];
    let diverging_losses = last.val_loss > start.val_loss && last.train_loss < start.train_loss;
    OverfitDiagnosis { flagged: gap_exceeded || diverging_losses, accuracy_gap, gap_exceeded, diverging_losses }
}
