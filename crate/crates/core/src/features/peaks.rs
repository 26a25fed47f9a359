//! QRS detection: zero-phase band-pass, derivative, squaring, moving-window
//! integration and an adaptive two-level threshold.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub integration_ms: f64,
    pub refractory_ms: f64,
    /// Half-width of the window in which a detection is snapped to the signal extremum.
    pub localize_ms: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            band_low_hz: 5.0,
            band_high_hz: 15.0,
            integration_ms: 150.0,
            refractory_ms: 200.0,
            localize_ms: 80.0,
        }
    }
}

pub const MIN_DETECTION_SECS: f64 = 2.0;

fn ms_to_samples(ms: f64, fs: f64) -> usize {
    (ms * fs / 1000.0).round() as usize
}

/// RBJ band-pass biquad (0 dB peak), run forward then backward.
fn bandpass_zero_phase<T: Scalar>(x: &[T], fs: f64, lo: f64, hi: f64) -> Vec<T> {
    let hi = hi.min(0.45 * fs);
    let f0 = (lo * hi).sqrt();
    let q = f0 / (hi - lo);
    let w0 = 2.0 * PI * f0 / fs;
    let alpha = w0.sin() / (2.0 * q);
    let a0 = 1.0 + alpha;
    let b = [alpha / a0, 0.0, -alpha / a0].map(T::lit);
    let a = [-2.0 * w0.cos() / a0, (1.0 - alpha) / a0].map(T::lit);

    let run = |input: &mut dyn Iterator<Item = T>| -> Vec<T> {
        let (mut x1, mut x2, mut y1, mut y2) = (T::zero(), T::zero(), T::zero(), T::zero());
        input
            .map(|x0| {
                let y0 = b[0] * x0 + b[1] * x1 + b[2] * x2 - a[0] * y1 - a[1] * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    };
    let fwd = run(&mut x.iter().copied());
    let mut back = run(&mut fwd.iter().rev().copied());
    back.reverse();
    back
}

/// Five-point centered derivative.
fn derivative<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let at = |i: isize| x[i.clamp(0, n as isize - 1) as usize];
    (0..n as isize)
        .map(|i| (T::lit(2.0) * at(i + 2) + at(i + 1) - at(i - 1) - T::lit(2.0) * at(i - 2)) / T::lit(8.0))
        .collect()
}

/// Centered moving average of width `w` (odd).
fn moving_average<T: Scalar>(x: &[T], w: usize) -> Vec<T> {
    let half = w / 2;
    let n = x.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(T::zero());
    for &v in x {
        let last = *prefix.last().expect("non-empty");
        prefix.push(last + v);
    }
    let width = T::lit((2 * half + 1) as f64);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / width
        })
        .collect()
}

/// Moving-window-integrated energy used for thresholding.
pub fn integrated_energy<T: Scalar>(signal: &[T], sampling_rate: u32, cfg: &DetectorConfig) -> Vec<T> {
    let fs = f64::from(sampling_rate);
    let mean = signal.iter().copied().sum::<T>() / T::lit(signal.len().max(1) as f64);
    let centered: Vec<T> = signal.iter().map(|&v| v - mean).collect();
    let filtered = bandpass_zero_phase(&centered, fs, cfg.band_low_hz, cfg.band_high_hz);
    let squared: Vec<T> = derivative(&filtered).into_iter().map(|d| d * d).collect();
    let w = ms_to_samples(cfg.integration_ms, fs) | 1;
    moving_average(&squared, w)
}

pub fn detect_r_peaks<T: Scalar>(signal: &[T], sampling_rate: u32) -> Result<Vec<usize>> {
    detect_r_peaks_with(signal, sampling_rate, &DetectorConfig::default())
}

/// Strictly increasing R-peak indices at least one refractory period apart.
pub fn detect_r_peaks_with<T: Scalar>(
    signal: &[T],
    sampling_rate: u32,
    cfg: &DetectorConfig,
) -> Result<Vec<usize>> {
    let fs = f64::from(sampling_rate);
    let seconds = signal.len() as f64 / fs;
    if sampling_rate == 0 || seconds < MIN_DETECTION_SECS {
        return Err(Error::TooShort { seconds });
    }
    let energy = integrated_energy(signal, sampling_rate, cfg);
    let refractory = ms_to_samples(cfg.refractory_ms, fs);

    // Local maxima of the integrated energy.
    let n = energy.len();
    let maxima: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| energy[i] > energy[i - 1] && energy[i] >= energy[i + 1] && energy[i] > T::zero())
        .collect();
    if maxima.is_empty() {
        return Ok(Vec::new());
    }

    // Threshold training on the first two seconds.
    let learn = ms_to_samples(MIN_DETECTION_SECS * 1000.0, fs).min(n);
    let peak0 = energy[..learn].iter().copied().fold(T::zero(), T::max);
    let mean0 = energy[..learn].iter().copied().sum::<T>() / T::lit(learn as f64);
    let mut spk = peak0 * T::lit(0.25);
    let mut npk = mean0 * T::lit(0.5);
    let quarter = T::lit(0.25);
    let eighth = T::lit(0.125);
    let mut threshold = npk + quarter * (spk - npk);

    let mut accepted: Vec<usize> = Vec::new();
    for &i in &maxima {
        let p = energy[i];
        if p > threshold {
            match accepted.last_mut() {
                Some(last) if i - *last < refractory => {
                    if p > energy[*last] {
                        *last = i;
                    }
                }
                _ => accepted.push(i),
            }
            spk = eighth * p + (T::one() - eighth) * spk;
        } else {
            npk = eighth * p + (T::one() - eighth) * npk;
        }
        threshold = npk + quarter * (spk - npk);
    }

    // Search back over long gaps with half the final threshold.
    if accepted.len() >= 2 {
        let mut rr: Vec<usize> = accepted.windows(2).map(|w| w[1] - w[0]).collect();
        rr.sort_unstable();
        let typical = rr[rr.len() / 2] as f64;
        let half = threshold * T::lit(0.5);
        let mut extra = Vec::new();
        for w in accepted.windows(2) {
            if (w[1] - w[0]) as f64 > 1.66 * typical {
                let best = maxima
                    .iter()
                    .copied()
                    .filter(|&i| i >= w[0] + refractory && i + refractory <= w[1] && energy[i] > half)
                    .max_by(|&a, &b| energy[a].partial_cmp(&energy[b]).unwrap_or(std::cmp::Ordering::Equal));
                extra.extend(best);
            }
        }
        accepted.extend(extra);
        accepted.sort_unstable();
    }

    Ok(localize(signal, &accepted, fs, cfg, refractory))
}

/// Snaps each detection to the largest deviation from the signal median. A local
/// median would sit inside a wide complex and could favour a flat sample.
fn localize<T: Scalar>(signal: &[T], detections: &[usize], fs: f64, cfg: &DetectorConfig, refractory: usize) -> Vec<usize> {
    let half = ms_to_samples(cfg.localize_ms, fs);
    let base = crate::scalar::median(signal).unwrap_or_else(T::zero);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(detections.len());
    for &d in detections {
        let lo = d.saturating_sub(half);
        let hi = (d + half + 1).min(signal.len());
        let window = &signal[lo..hi];
        let (offset, dev) = window
            .iter()
            .map(|&v| (v - base).abs())
            .enumerate()
            .fold((0, T::lit(-1.0)), |best, (j, v)| if v > best.1 { (j, v) } else { best });
        let idx = lo + offset;
        match out.last_mut() {
            Some(last) if idx <= last.0 || idx - last.0 < refractory => {
                if dev > last.1 {
                    *last = (idx, dev);
                }
            }
            _ => out.push((idx, dev)),
        }
    }
    // Replacing the previous entry above may break spacing with its predecessor.
    let mut result: Vec<usize> = Vec::with_capacity(out.len());
    for (idx, _) in out {
        if result.last().is_none_or(|&l| idx > l && idx - l >= refractory) {
            result.push(idx);
        }
    }
    result
}
