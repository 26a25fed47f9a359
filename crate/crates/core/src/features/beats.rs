//! Per-beat fiducial measurements, aggregated by median across beats.

use serde::{Deserialize, Serialize};

use super::axis::frontal_axis;
use super::peaks::{detect_r_peaks_with, DetectorConfig};
use crate::error::{Error, Result};
use crate::ingest::{EcgRecord, Lead};
use crate::scalar::{median, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    /// R and S are searched within ± this many ms of the R peak.
    pub qrs_window_ms: f64,
    /// Isoelectric (PR segment) window, ms before the R peak: `[start, end]`.
    pub baseline_window_ms: (f64, f64),
    /// P-wave window, ms before the R peak: `[start, end]`.
    pub p_window_ms: (f64, f64),
    /// QRS onset/offset: where the spatial magnitude falls below this fraction of its peak.
    pub qrs_edge_fraction: f64,
    /// Onset/offset search limit, ms from the R peak.
    pub qrs_search_ms: f64,
    /// Minimum net-QRS vector magnitude (mV·ms) for a defined axis.
    pub axis_floor: f64,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            qrs_window_ms: 60.0,
            baseline_window_ms: (110.0, 80.0),
            p_window_ms: (200.0, 60.0),
            qrs_edge_fraction: 0.05,
            qrs_search_ms: 150.0,
            axis_floor: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiducialSet<T> {
    pub r_peak_indices: Vec<usize>,
    /// Beats that fit entirely inside the record and were measured.
    pub beats_measured: usize,
    /// mV
    pub r_amp_v1: T,
    /// mV, magnitude (≥ 0)
    pub s_amp_v1: T,
    /// ms
    pub qrs_duration: T,
    /// mV·ms, baseline-corrected area over the QRS in lead I.
    pub net_qrs_i: T,
    /// mV·ms, same for aVF.
    pub net_qrs_avf: T,
    /// Degrees in (−180, 180]; `None` when the net QRS vector is below the floor.
    pub frontal_axis: Option<T>,
    /// mV
    pub p_amp_ii: T,
}

struct Beat<T> {
    r_v1: T,
    s_v1: T,
    qrs_ms: T,
    area_i: T,
    area_avf: T,
    p_ii: T,
}

fn ms(v: f64, fs: f64) -> usize {
    (v * fs / 1000.0).round() as usize
}

/// Spatial QRS magnitude `sqrt(Σ (x_l − b_l)²)` at sample `i`.
fn magnitude<T: Scalar>(record: &EcgRecord<T>, baselines: &[T], i: usize) -> T {
    record
        .samples()
        .column(i)
        .iter()
        .zip(baselines)
        .map(|(&x, &b)| (x - b) * (x - b))
        .sum::<T>()
        .sqrt()
}

/// Catmull-Rom interpolation of `x` at fractional position `t`.
fn cubic_at<T: Scalar>(x: impl Fn(usize) -> T, n: usize, t: T) -> T {
    let i = t.floor().to_isize().unwrap_or(0);
    let f = t - T::lit(i as f64);
    let at = |k: isize| x(k.clamp(0, n as isize - 1) as usize);
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let five = T::lit(5.0);
    half * (two * p1
        + (p2 - p0) * f
        + (two * p0 - five * p1 + four * p2 - p3) * f * f
        + (three * (p1 - p2) + p3 - p0) * f * f * f)
}

/// Sub-samples per sample used when locating QRS edges.
const EDGE_SUBSTEPS: usize = 16;

/// Fractional sample position where `mag` first drops below `level`, walking from `from`
/// towards `limit` (exclusive of `from`).
fn edge<T: Scalar>(mag: impl Fn(T) -> T, from: usize, limit: usize, level: T) -> T {
    let step = T::lit(1.0 / EDGE_SUBSTEPS as f64);
    let dir = if limit < from { -T::one() } else { T::one() };
    let total = from.abs_diff(limit) * EDGE_SUBSTEPS;
    let start = T::lit(from as f64);
    let mut prev = mag(start);
    for k in 1..=total {
        let t = start + dir * step * T::lit(k as f64);
        let cur = mag(t);
        if cur < level {
            let frac = if prev > cur { (prev - level) / (prev - cur) } else { T::zero() };
            return t - dir * step * (T::one() - frac);
        }
        prev = cur;
    }
    T::lit(limit as f64)
}

fn measure_one<T: Scalar>(record: &EcgRecord<T>, r: usize, cfg: &MeasureConfig) -> Option<Beat<T>> {
    let fs = f64::from(record.sampling_rate());
    let n = record.len();
    let back = ms(cfg.p_window_ms.0.max(cfg.baseline_window_ms.0), fs);
    let fwd = ms(cfg.qrs_search_ms.max(cfg.qrs_window_ms), fs);
    if r < back || r + fwd >= n {
        return None;
    }
    let samples = record.samples();

    let (b0, b1) = (r - ms(cfg.baseline_window_ms.0, fs), r - ms(cfg.baseline_window_ms.1, fs));
    let baselines: Vec<T> = samples
        .rows()
        .into_iter()
        .map(|row| {
            let seg: Vec<T> = row.iter().skip(b0).take(b1 - b0 + 1).copied().collect();
            median(&seg).unwrap_or_else(T::zero)
        })
        .collect();

    // R and S in V1.
    let v1 = record.lead(Lead::V1);
    let base_v1 = baselines[Lead::V1.index()];
    let half = ms(cfg.qrs_window_ms, fs);
    let (w0, w1) = (r - half, r + half);
    let (r_idx, r_dev) = (w0..=w1)
        .map(|i| (i, v1[i] - base_v1))
        .fold((r, T::lit(f64::NEG_INFINITY)), |best, c| if c.1 > best.1 { c } else { best });
    let r_v1 = r_dev.max(T::zero());
    let mut s_v1 = T::zero();
    if let Some(start) = (r_idx + 1..=w1).find(|&i| v1[i] - base_v1 < T::zero()) {
        s_v1 = (start..=w1)
            .map(|i| v1[i] - base_v1)
            .take_while(|&d| d < T::zero())
            .fold(T::zero(), |m, d| m.max(-d));
    }

    // QRS extent from the spatial magnitude, interpolated between samples.
    let mag_at = |t: T| {
        samples
            .rows()
            .into_iter()
            .zip(&baselines)
            .map(|(row, &b)| {
                let v = cubic_at(|i| row[i] - b, n, t);
                v * v
            })
            .sum::<T>()
            .sqrt()
    };
    let (peak_idx, peak) = (w0..=w1)
        .map(|i| (i, magnitude(record, &baselines, i)))
        .fold((r, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
    if peak <= T::zero() {
        return None;
    }
    let level = peak * T::lit(cfg.qrs_edge_fraction);
    let search = ms(cfg.qrs_search_ms, fs);
    let onset = edge(mag_at, peak_idx, r - search, level);
    let offset = edge(mag_at, peak_idx, r + search, level);
    let qrs_ms = (offset - onset) * T::lit(1000.0 / fs);

    // Net QRS area over the integer samples inside [onset, offset].
    let first = onset.ceil().to_usize().unwrap_or(r);
    let last = offset.floor().to_usize().unwrap_or(r);
    let dt = T::lit(1000.0 / fs);
    let area = |lead: Lead| {
        let row = record.lead(lead);
        let b = baselines[lead.index()];
        (first..=last).map(|i| row[i] - b).sum::<T>() * dt
    };

    // P amplitude in lead II.
    let ii = record.lead(Lead::II);
    let base_ii = baselines[Lead::II.index()];
    let (p0, p1) = (r - ms(cfg.p_window_ms.0, fs), r - ms(cfg.p_window_ms.1, fs));
    let p_ii = (p0..=p1)
        .map(|i| ii[i] - base_ii)
        .fold(T::zero(), T::max);

    Some(Beat {
        r_v1,
        s_v1,
        qrs_ms,
        area_i: area(Lead::I),
        area_avf: area(Lead::AVF),
        p_ii,
    })
}

/// Measures every beat that fits inside the record and aggregates by median.
pub fn measure_beats<T: Scalar>(record: &EcgRecord<T>, r_peaks: &[usize], cfg: &MeasureConfig) -> Result<FiducialSet<T>> {
    let beats: Vec<Beat<T>> = r_peaks
        .iter()
        .filter_map(|&r| measure_one(record, r, cfg))
        .collect();
    if beats.is_empty() {
        return Err(Error::NoBeats);
    }
    let med = |f: fn(&Beat<T>) -> T| {
        let v: Vec<T> = beats.iter().map(f).collect();
        median(&v).expect("non-empty")
    };
    let net_qrs_i = med(|b| b.area_i);
    let net_qrs_avf = med(|b| b.area_avf);
    Ok(FiducialSet {
        r_peak_indices: r_peaks.to_vec(),
        beats_measured: beats.len(),
        r_amp_v1: med(|b| b.r_v1),
        s_amp_v1: med(|b| b.s_v1),
        qrs_duration: med(|b| b.qrs_ms),
        net_qrs_i,
        net_qrs_avf,
        frontal_axis: frontal_axis(net_qrs_i, net_qrs_avf, T::lit(cfg.axis_floor)).ok(),
        p_amp_ii: med(|b| b.p_ii),
    })
}

/// Detection signal for a whole record: the spatial magnitude about each lead's median.
pub fn detection_signal<T: Scalar>(record: &EcgRecord<T>) -> Vec<T> {
    let meds: Vec<T> = record
        .samples()
        .rows()
        .into_iter()
        .map(|row| median(&row.to_vec()).unwrap_or_else(T::zero))
        .collect();
    (0..record.len()).map(|i| magnitude(record, &meds, i)).collect()
}

/// Detects beats on all leads jointly, then measures them.
pub fn extract_fiducials<T: Scalar>(
    record: &EcgRecord<T>,
    detector: &DetectorConfig,
    cfg: &MeasureConfig,
) -> Result<FiducialSet<T>> {
    let peaks = detect_r_peaks_with(&detection_signal(record), record.sampling_rate(), detector)?;
    measure_beats(record, &peaks, cfg)
}
