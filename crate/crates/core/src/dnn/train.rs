use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{bce_loss, is_positive, Mlp};
use crate::error::{Error, Result};
use crate::preprocess::LabeledExample;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr0: f64,
    pub decay_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub min_delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 50, lr0: 0.001, decay_rate: 0.95, batch_size: 32, patience: 10, seed: 0, min_delta: 1e-4 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return Err(Error::Config(format!("decay_rate must be in (0, 1], got {}", self.decay_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::Config(format!("min_delta must be >= 0, got {}", self.min_delta)));
        }
        Ok(())
    }
}

/// `lr0 · decay_rate^epoch`, epochs counted from 0.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    let e = i32::try_from(epoch).unwrap_or(i32::MAX);
    cfg.lr0 * cfg.decay_rate.powi(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc,lr";

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }

    /// One row per epoch. `{:?}` prints the shortest string that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{:?}\n",
                e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc, e.lr
            ));
        }
        out
    }

    /// Parses the epoch rows written by [`TrainHistory::to_csv`]. `best_epoch` is
    /// recomputed as the first epoch with the lowest validation loss.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut epochs = Vec::new();
        for (i, row) in reader.deserialize::<EpochRecord>().enumerate() {
            epochs.push(row.map_err(|e| Error::Row { row: i + 1, message: e.to_string() })?);
        }
        let best_epoch = best_of(&epochs).map_or(0, |e| e.epoch);
        Ok(Self { epochs, best_epoch, stopped_early: false })
    }
}

fn best_of(epochs: &[EpochRecord]) -> Option<&EpochRecord> {
    epochs.iter().fold(None, |best: Option<&EpochRecord>, e| match best {
        Some(b) if b.val_loss <= e.val_loss => Some(b),
        _ => Some(e),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Halts once more than `patience` consecutive epochs fail to beat the best
/// validation loss by `min_delta`.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    min_delta: f64,
    best: f64,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self { patience, min_delta, best: f64::INFINITY, bad_epochs: 0 }
    }

    pub fn observe(&mut self, val_loss: f64) -> StopDecision {
        if val_loss < self.best - self.min_delta {
            self.best = val_loss;
            self.bad_epochs = 0;
            return StopDecision::Improved;
        }
        self.bad_epochs += 1;
        if self.bad_epochs > self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

/// Inputs stacked row-wise with a label matrix of matching height.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub inputs: Array2<T>,
    pub labels: Array2<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Array2<T>, labels: Array2<T>) -> Result<Self> {
        if inputs.nrows() != labels.nrows() {
            return Err(Error::Shape(format!("{} inputs, {} label rows", inputs.nrows(), labels.nrows())));
        }
        Ok(Self { inputs, labels })
    }

    /// Single-output labels (`label`) or, with `per_condition`, two outputs (RVH, RAE).
    pub fn from_examples(examples: &[&LabeledExample<T>], per_condition: bool) -> Result<Self> {
        let first = examples.first().ok_or(Error::EmptyDataset)?;
        let d = first.input.len();
        let mut inputs = Array2::zeros((examples.len(), d));
        let outputs = if per_condition { 2 } else { 1 };
        let mut labels = Array2::zeros((examples.len(), outputs));
        let flag = |b: bool| if b { T::one() } else { T::zero() };
        for (i, e) in examples.iter().enumerate() {
            if e.input.len() != d {
                return Err(Error::Shape(format!(
                    "example {} has input length {}, expected {d}",
                    e.record_id,
                    e.input.len()
                )));
            }
            inputs.row_mut(i).assign(&e.input);
            if per_condition {
                labels[[i, 0]] = flag(e.sub_labels.rvh);
                labels[[i, 1]] = flag(e.sub_labels.rae);
            } else {
                labels[[i, 0]] = flag(e.label);
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }
}

/// Fraction of (example, output) entries whose hard label matches.
pub fn label_accuracy<T: Scalar>(probabilities: ArrayView2<T>, labels: ArrayView2<T>) -> f64 {
    let total = probabilities.len();
    if total == 0 {
        return 0.0;
    }
    let hits = probabilities
        .iter()
        .zip(labels.iter())
        .filter(|(&p, &y)| is_positive(p) == (y > T::lit(0.5)))
        .count();
    hits as f64 / total as f64
}

/// Full-set loss and accuracy.
pub fn evaluate<T: Scalar>(model: &Mlp<T>, data: &Dataset<T>) -> Result<(f64, f64)> {
    let cache = model.forward(data.inputs.view())?;
    let loss = bce_loss(cache.output(), data.labels.view())?.to_f64_lossless();
    Ok((loss, label_accuracy(cache.output(), data.labels.view())))
}

/// Where the per-epoch validation numbers come from.
pub trait ValidationSource<T> {
    /// Loss and accuracy of `model` after 1-based `epoch`.
    fn evaluate(&mut self, model: &Mlp<T>, epoch: usize) -> Result<(f64, f64)>;
}

impl<T, V: ValidationSource<T> + ?Sized> ValidationSource<T> for &mut V {
    fn evaluate(&mut self, model: &Mlp<T>, epoch: usize) -> Result<(f64, f64)> {
        (**self).evaluate(model, epoch)
    }
}

impl<T: Scalar> ValidationSource<T> for &Dataset<T> {
    fn evaluate(&mut self, model: &Mlp<T>, _epoch: usize) -> Result<(f64, f64)> {
        evaluate(model, self)
    }
}

impl<T: Scalar> ValidationSource<T> for Dataset<T> {
    fn evaluate(&mut self, model: &Mlp<T>, _epoch: usize) -> Result<(f64, f64)> {
        evaluate(model, self)
    }
}

/// Mini-batch gradient descent with exponential decay and early stopping. The
/// returned model carries the parameters of the best validation-loss epoch.
pub fn train<T: Scalar, V: ValidationSource<T>>(
    mut model: Mlp<T>,
    train_set: &Dataset<T>,
    mut val: V,
    cfg: &TrainConfig,
) -> Result<(Mlp<T>, TrainHistory)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train_set.inputs.ncols() != model.input_len() || train_set.labels.ncols() != model.output_len() {
        return Err(Error::Shape(format!(
            "training data {}→{}, model {}→{}",
            train_set.inputs.ncols(),
            train_set.labels.ncols(),
            model.input_len(),
            model.output_len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience, cfg.min_delta);
    let mut best = model.clone();
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let step = T::lit(lr);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_set.inputs.select(Axis(0), chunk);
            let y = train_set.labels.select(Axis(0), chunk);
            let cache = model.forward(x.view())?;
            let grads = model.backward(&cache, y.view())?;
            model.apply(&grads, step);
        }

        let number = epoch + 1;
        let (train_loss, train_acc) = evaluate(&model, train_set)?;
        let (val_loss, val_acc) = val.evaluate(&model, number)?;
        if !train_loss.is_finite() || !val_loss.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch: number });
        }
        history.epochs.push(EpochRecord { epoch: number, train_loss, train_acc, val_loss, val_acc, lr });

        match stopper.observe(val_loss) {
            StopDecision::Improved => {
                best.clone_from(&model);
                history.best_epoch = number;
            }
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schedule_values() {
        let cfg = TrainConfig::default();
        assert_eq!(lr_schedule(0, &cfg), 0.001);
        let c = TrainConfig { decay_rate: 0.9, ..cfg.clone() };
        assert_relative_eq!(lr_schedule(10, &c), 3.486_784_401e-4, max_relative = 1e-12);
        let flat = TrainConfig { decay_rate: 1.0, ..cfg };
        assert_eq!(lr_schedule(37, &flat), 0.001);
    }

    #[test]
    fn stopping_trace() {
        let mut s = EarlyStopping::new(2, 1e-4);
        let d: Vec<_> = [0.50, 0.40, 0.45, 0.46, 0.47].iter().map(|&v| s.observe(v)).collect();
        use StopDecision::*;
        assert_eq!(d, vec![Improved, Improved, Continue, Continue, Stop]);
        assert_eq!(s.best(), 0.40);
    }

    #[test]
    fn min_delta_counts_as_no_improvement() {
        let mut s = EarlyStopping::new(0, 0.1);
        assert_eq!(s.observe(1.0), StopDecision::Improved);
        assert_eq!(s.observe(0.95), StopDecision::Stop);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { lr0: 0.0, ..Default::default() },
            TrainConfig { decay_rate: 1.5, ..Default::default() },
            TrainConfig { decay_rate: 0.0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn history_csv_round_trip() {
        let h = TrainHistory {
            epochs: vec![
                EpochRecord { epoch: 1, train_loss: 0.7, train_acc: 0.5, val_loss: 0.69, val_acc: 0.5, lr: 0.001 },
                EpochRecord { epoch: 2, train_loss: 0.1 + 0.2, train_acc: 1.0 / 3.0, val_loss: 0.6, val_acc: 0.75, lr: 0.00095 },
            ],
            best_epoch: 2,
            stopped_early: false,
        };
        let text = h.to_csv();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(TrainHistory::from_csv(&text).unwrap(), h);
    }
}
