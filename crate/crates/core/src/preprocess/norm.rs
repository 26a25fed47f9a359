use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EcgRecord, RecordMeta, Sex};
use crate::scalar::Scalar;

/// Number of demographic features: age, sex, height, weight.
pub const DEMOGRAPHIC_FEATURES: usize = 4;

/// Per-lead z-score parameters (population std), fitted on training records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    /// Present when demographics are part of the model input.
    pub demographics: Option<DemographicStats<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicStats<T> {
    pub mean: [T; DEMOGRAPHIC_FEATURES],
    pub std: [T; DEMOGRAPHIC_FEATURES],
}

/// Fits per-lead mean and population std over every sample of every record.
pub fn compute_norm_stats<'a, T: Scalar>(
    records: impl IntoIterator<Item = &'a EcgRecord<T>>,
) -> Result<NormStats<T>> {
    let mut sum = Vec::new();
    let mut count = 0usize;
    let mut kept: Vec<&EcgRecord<T>> = Vec::new();
    for r in records {
        let s = r.samples();
        if sum.is_empty() {
            sum = vec![0.0_f64; s.nrows()];
        }
        for (lead, row) in s.rows().into_iter().enumerate() {
            sum[lead] += row.iter().map(|v| v.to_f64_lossless()).sum::<f64>();
        }
        count += s.ncols();
        kept.push(r);
    }
    if kept.is_empty() || count == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0_f64; mean.len()];
    for r in &kept {
        for (lead, row) in r.samples().rows().into_iter().enumerate() {
            sq[lead] += row
                .iter()
                .map(|v| {
                    let d = v.to_f64_lossless() - mean[lead];
                    d * d
                })
                .sum::<f64>();
        }
    }
    Ok(NormStats {
        mean: mean.iter().map(|&m| T::lit(m)).collect(),
        std: sq.iter().map(|&s| T::lit((s / n).sqrt())).collect(),
        demographics: None,
    })
}

/// Raw demographic vector; `None` where the catalog has no value.
pub fn demographic_values(meta: &RecordMeta) -> [Option<f64>; DEMOGRAPHIC_FEATURES] {
    let sex = match meta.sex {
        Sex::M => Some(0.0),
        Sex::F => Some(1.0),
        Sex::Unknown => None,
    };
    [meta.age, sex, meta.height, meta.weight]
}

impl<T: Scalar> NormStats<T> {
    /// Adds demographic z-score parameters fitted on the present values only.
    pub fn with_demographics<'a>(mut self, train_meta: impl IntoIterator<Item = &'a RecordMeta>) -> Self {
        let mut acc = [(0.0_f64, 0.0_f64, 0usize); DEMOGRAPHIC_FEATURES];
        let values: Vec<_> = train_meta.into_iter().map(demographic_values).collect();
        for v in &values {
            for (a, x) in acc.iter_mut().zip(v) {
                if let Some(x) = x {
                    a.0 += x;
                    a.2 += 1;
                }
            }
        }
        let means: Vec<f64> = acc
            .iter()
            .map(|a| if a.2 > 0 { a.0 / a.2 as f64 } else { 0.0 })
            .collect();
        for v in &values {
            for ((a, x), m) in acc.iter_mut().zip(v).zip(&means) {
                if let Some(x) = x {
                    a.1 += (x - m) * (x - m);
                }
            }
        }
        let mut mean = [T::zero(); DEMOGRAPHIC_FEATURES];
        let mut std = [T::zero(); DEMOGRAPHIC_FEATURES];
        for i in 0..DEMOGRAPHIC_FEATURES {
            mean[i] = T::lit(means[i]);
            std[i] = if acc[i].2 > 0 {
                T::lit((acc[i].1 / acc[i].2 as f64).sqrt())
            } else {
                T::zero()
            };
        }
        self.demographics = Some(DemographicStats { mean, std });
        self
    }

    pub fn num_leads(&self) -> usize {
        self.mean.len()
    }
}

#[inline]
fn zscore<T: Scalar>(x: T, mean: T, std: T) -> T {
    if std > T::zero() {
        (x - mean) / std
    } else {
        T::zero()
    }
}

/// `(x - mean) / std` per lead; leads with zero std map to 0.
pub fn normalize<T: Scalar>(record: &EcgRecord<T>, stats: &NormStats<T>) -> Result<Array2<T>> {
    let s = record.samples();
    if s.nrows() != stats.num_leads() {
        return Err(Error::Shape(format!(
            "stats cover {} leads, record has {}",
            stats.num_leads(),
            s.nrows()
        )));
    }
    let mut out = s.clone();
    for (lead, mut row) in out.rows_mut().into_iter().enumerate() {
        let (m, sd) = (stats.mean[lead], stats.std[lead]);
        row.mapv_inplace(|x| zscore(x, m, sd));
    }
    Ok(out)
}

/// Normalized demographic features; missing values become 0 (the training mean).
pub fn normalize_demographics<T: Scalar>(meta: &RecordMeta, stats: &DemographicStats<T>) -> [T; DEMOGRAPHIC_FEATURES] {
    let raw = demographic_values(meta);
    let mut out = [T::zero(); DEMOGRAPHIC_FEATURES];
    for i in 0..DEMOGRAPHIC_FEATURES {
        out[i] = raw[i].map_or(T::zero(), |x| zscore(T::lit(x), stats.mean[i], stats.std[i]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn record_with_lead0(values: &[f64]) -> EcgRecord<f64> {
        let mut s = Array2::zeros((12, values.len()));
        for (i, v) in values.iter().enumerate() {
            s[[0, i]] = *v;
        }
        EcgRecord::new("r", 100, s).unwrap()
    }

    #[test]
    fn constant_lead() {
        let stats = compute_norm_stats([&record_with_lead0(&[2.0; 5])]).unwrap();
        assert_eq!(stats.mean[0], 2.0);
        assert_eq!(stats.std[0], 0.0);
    }

    #[test]
    fn one_two_three() {
        let r = record_with_lead0(&[1.0, 2.0, 3.0]);
        let stats = compute_norm_stats([&r]).unwrap();
        assert_abs_diff_eq!(stats.mean[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(stats.std[0], (2.0_f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(stats.std[0], 0.8165, epsilon = 1e-4);

        let z = normalize(&r, &stats).unwrap();
        assert_abs_diff_eq!(z[[0, 0]], -1.2247, epsilon = 1e-4);
        assert_abs_diff_eq!(z[[0, 1]], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[[0, 2]], 1.2247, epsilon = 1e-4);
    }

    #[test]
    fn symmetric_records_center_at_zero() {
        let a = record_with_lead0(&[0.7, -0.3]);
        let b = record_with_lead0(&[-0.7, 0.3]);
        let stats = compute_norm_stats([&a, &b]).unwrap();
        assert_abs_diff_eq!(stats.mean[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_std_guard() {
        let stats = compute_norm_stats([&record_with_lead0(&[2.0; 4])]).unwrap();
        let z = normalize(&record_with_lead0(&[2.0, 9.0, -4.0, 2.0]), &stats).unwrap();
        assert!(z.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_training_set() {
        let none: Vec<&EcgRecord<f64>> = vec![];
        assert!(matches!(compute_norm_stats(none), Err(Error::EmptyDataset)));
    }

    #[test]
    fn demographics_skip_missing() {
        let mut a = RecordMeta::new("a");
        a.age = Some(40.0);
        a.sex = Sex::F;
        let mut b = RecordMeta::new("b");
        b.age = Some(60.0);
        let stats = compute_norm_stats([&record_with_lead0(&[1.0, 2.0])])
            .unwrap()
            .with_demographics([&a, &b]);
        let d = stats.demographics.as_ref().unwrap();
        assert_eq!(d.mean[0], 50.0);
        assert_eq!(d.std[0], 10.0);
        let feats = normalize_demographics(&b, d);
        assert_eq!(feats, [1.0, 0.0, 0.0, 0.0]);
    }
}
