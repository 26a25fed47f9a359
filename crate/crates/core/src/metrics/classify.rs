use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn check(predictions: &[bool], labels: &[bool]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::Shape(format!("{} predictions, {} labels", predictions.len(), labels.len())));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn confusion(predictions: &[bool], labels: &[bool]) -> Result<Confusion> {
    check(predictions, labels)?;
    let mut c = Confusion::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn accuracy(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    check(predictions, labels)?;
    let hits = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// `2tp / (2tp + fp + fn)`, or 0 when nothing was predicted or present.
pub fn f1(c: &Confusion) -> f64 {
    let denom = 2 * c.tp + c.fp + c.fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / denom as f64
    }
}
