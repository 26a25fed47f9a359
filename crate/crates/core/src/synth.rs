//! Synthetic 12-lead records with planted fiducial parameters.
//!
//! Each beat is a sum of Gaussian bumps (P, q, R, s, T). Limb-lead QRS
//! complexes are projections of one frontal-plane vector, so the net QRS
//! areas of leads I and aVF point exactly at the requested axis. Bump
//! centres are snapped to the sample grid so planted peak amplitudes are
//! sampled exactly.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{apply_thresholds, CriteriaInputs, CriteriaResult, CriteriaThresholds};
use crate::ingest::{EcgRecord, Lead, RecordMeta, CODE_NORM, CODE_RAE, CODE_RVH};
use crate::scalar::Scalar;

/// How closely the fiducial extractor recovers planted values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementTolerance {
    pub amplitude_mv: f64,
    pub axis_deg: f64,
    pub qrs_ms: f64,
}

pub const MEASUREMENT_TOLERANCE: MeasurementTolerance = MeasurementTolerance {
    amplitude_mv: 0.05,
    axis_deg: 5.0,
    qrs_ms: 15.0,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// bpm, within [30, 220]
    pub heart_rate: f64,
    pub r_amp_v1: f64,
    pub s_amp_v1: f64,
    /// ms
    pub qrs_duration: f64,
    /// degrees
    pub target_axis: f64,
    pub p_amp_ii: f64,
    /// mV, white Gaussian noise added to every lead
    pub noise_std: f64,
    pub sampling_rate: u32,
    /// seconds
    pub duration: f64,
    /// Position of the first beat as a fraction of one RR interval.
    pub phase: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            heart_rate: 60.0,
            r_amp_v1: 0.3,
            s_amp_v1: 0.9,
            qrs_duration: 90.0,
            target_axis: 60.0,
            p_amp_ii: 0.12,
            noise_std: 0.0,
            sampling_rate: 100,
            duration: 10.0,
            phase: 0.5,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(30.0..=220.0).contains(&self.heart_rate) {
            return bad(format!("heart rate {} outside [30, 220]", self.heart_rate));
        }
        if [self.r_amp_v1, self.s_amp_v1, self.p_amp_ii].iter().any(|a| !(*a >= 0.0)) {
            return bad("amplitudes must be non-negative".into());
        }
        if !(self.noise_std >= 0.0) {
            return bad("noise_std must be non-negative".into());
        }
        if !(self.qrs_duration > 0.0 && self.qrs_duration <= 200.0) {
            return bad(format!("QRS duration {} outside (0, 200] ms", self.qrs_duration));
        }
        if self.sampling_rate == 0 || !(self.duration > 0.0) {
            return bad("sampling rate and duration must be positive".into());
        }
        if !(0.0..1.0).contains(&self.phase) {
            return bad(format!("phase {} outside [0, 1)", self.phase));
        }
        Ok(())
    }

    pub fn criteria_inputs(&self) -> CriteriaInputs {
        CriteriaInputs {
            r_amp_v1: self.r_amp_v1,
            s_amp_v1: self.s_amp_v1,
            qrs_duration_ms: self.qrs_duration,
            axis_deg: Some(self.target_axis),
            p_amp_ii: self.p_amp_ii,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecord<T> {
    pub record: EcgRecord<T>,
    pub params: SynthParams,
    /// Flags the planted parameters satisfy under the default thresholds.
    pub intended: CriteriaResult,
    /// Planted R-peak sample indices.
    pub beat_indices: Vec<usize>,
}

impl<T> SynthRecord<T> {
    /// Catalog entry whose diagnostic codes mirror the intended flags.
    pub fn meta(&self, record_id: &str) -> RecordMeta {
        let mut m = RecordMeta::new(record_id);
        if self.intended.rvh_positive {
            m = m.with_code(CODE_RVH, 100.0);
        }
        if self.intended.rae_flag {
            m = m.with_code(CODE_RAE, 100.0);
        }
        if !self.intended.any_positive() {
            m = m.with_code(CODE_NORM, 100.0);
        }
        m
    }
}

/// Frontal-plane lead angles (degrees) of I, II, III, aVR, aVL, aVF.
const LIMB_ANGLES: [(Lead, f64); 6] = [
    (Lead::I, 0.0),
    (Lead::II, 60.0),
    (Lead::III, 120.0),
    (Lead::AVR, -150.0),
    (Lead::AVL, -30.0),
    (Lead::AVF, 90.0),
];

/// (R, S) magnitudes for V2..V6.
const PRECORDIAL_QRS: [(Lead, [f64; 2]); 5] = [
    (Lead::V2, [0.6, 1.2]),
    (Lead::V3, [0.9, 0.9]),
    (Lead::V4, [1.3, 0.6]),
    (Lead::V5, [1.5, 0.5]),
    (Lead::V6, [1.2, 0.4]),
];

// QRS pulses are raised cosines. R sits at 0 and S at roughly a quarter of the planted
// duration; S and the R downstroke share that half-width, so each pulse is flat zero
// at the other's extremum. The R upstroke is then solved so the extractor's
// 5 %-of-peak spatial-magnitude width equals the planted duration.
const S_OFFSET_UNITS: f64 = 0.25;
/// Matches the V1 R/S search half-window.
const MAX_S_OFFSET_MS: f64 = 60.0;
/// Keeps the complex clear of the baseline window ending 80 ms before R.
const MAX_R_UPSTROKE_MS: f64 = 75.0;
const QRS_EDGE_FRACTION: f64 = 0.05;
/// Planted beats keep this far from either end of the record (s).
const EDGE_GUARD_S: f64 = 0.25;
const LIMB_QRS_MV: f64 = 1.0;
/// Larger V1 S waves would move the spatial-magnitude peak off the R wave.
const MAX_S_V1_MV: f64 = 2.2;
const LIMB_S_FRACTION: f64 = 0.35;
const P_AXIS_DEG: f64 = 60.0;
const P_OFFSET_MS: f64 = 170.0;
const P_SIGMA_MS: f64 = 15.0;
const T_OFFSET_MS: f64 = 280.0;
const T_SIGMA_MS: f64 = 40.0;
const T_AXIS_DEG: f64 = 45.0;
const T_AMP_MV: f64 = 0.2;

#[derive(Clone, Copy)]
enum Shape {
    Gaussian { sigma: f64 },
    /// cos² pulse with independent half-widths before and after its peak.
    RaisedCosine { left: f64, right: f64 },
}

impl Shape {
    fn reach(self) -> f64 {
        match self {
            Shape::Gaussian { sigma } => 5.0 * sigma,
            Shape::RaisedCosine { left, right } => left.max(right),
        }
    }

    fn at(self, d: f64) -> f64 {
        match self {
            Shape::Gaussian { sigma } => (-d * d / (2.0 * sigma * sigma)).exp(),
            Shape::RaisedCosine { left, right } if -left < d && d < right => {
                let w = if d < 0.0 { left } else { right };
                (std::f64::consts::FRAC_PI_2 * d / w).cos().powi(2)
            }
            Shape::RaisedCosine { .. } => 0.0,
        }
    }
}

struct Bump {
    offset: isize,
    shape: Shape,
    amp: [f64; 12],
}

fn add_bump(out: &mut Array2<f64>, center: isize, shape: Shape, amp: &[f64; 12]) {
    let n = out.ncols() as isize;
    let reach = shape.reach().ceil() as isize;
    for i in (center - reach).max(0)..(center + reach + 1).min(n) {
        let g = shape.at((i - center) as f64);
        for (lead, a) in amp.iter().enumerate() {
            if *a != 0.0 {
                out[[lead, i as usize]] += a * g;
            }
        }
    }
}

struct QrsAmplitudes {
    r: [f64; 12],
    s: [f64; 12],
}

fn qrs_amplitudes(p: &SynthParams) -> QrsAmplitudes {
    let mut a = QrsAmplitudes { r: [0.0; 12], s: [0.0; 12] };
    for (lead, angle) in LIMB_ANGLES {
        let c = (p.target_axis - angle).to_radians().cos() * LIMB_QRS_MV;
        a.r[lead.index()] = c;
        a.s[lead.index()] = -LIMB_S_FRACTION * c;
    }
    a.r[Lead::V1.index()] = p.r_amp_v1;
    a.s[Lead::V1.index()] = -p.s_amp_v1;
    for (lead, [ra, sa]) in PRECORDIAL_QRS {
        a.r[lead.index()] = ra;
        a.s[lead.index()] = -sa;
    }
    a
}

/// Threshold-crossing width of the continuous QRS spatial magnitude. R sits at 0 with
/// half-widths `r_left` and `s_offset`, S at `s_offset` with half-width `s_offset`.
fn qrs_width(a: &QrsAmplitudes, r_left: f64, s_offset: f64) -> f64 {
    const STEPS: f64 = 1500.0;
    let r_shape = Shape::RaisedCosine { left: r_left, right: s_offset };
    let s_shape = Shape::RaisedCosine { left: s_offset, right: s_offset };
    let mag = |t: f64| {
        (0..12)
            .map(|l| {
                let v = a.r[l] * r_shape.at(t) + a.s[l] * s_shape.at(t - s_offset);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    let span = r_left + 2.0 * s_offset;
    let dt = span / STEPS;
    let (peak_t, peak) = (0..=STEPS as usize)
        .map(|k| -r_left + k as f64 * dt)
        .map(|t| (t, mag(t)))
        .fold((0.0, 0.0), |b, c| if c.1 > b.1 { c } else { b });
    let level = QRS_EDGE_FRACTION * peak;
    let walk = |dir: f64| {
        let mut t = peak_t;
        while mag(t + dir * dt) >= level && (t - peak_t).abs() < span {
            t += dir * dt;
        }
        t
    };
    walk(1.0) - walk(-1.0)
}

fn beat_template(p: &SynthParams) -> Vec<Bump> {
    let fs = f64::from(p.sampling_rate);
    let samples = |ms: f64| (ms * fs / 1000.0).round() as isize;
    let amps = qrs_amplitudes(p);
    // S lands on a sample inside the V1 search window and both pulses are exactly
    // zero at the other's extremum. The R upstroke absorbs the rest of the width.
    let unit_ms = p.qrs_duration / qrs_width(&amps, S_OFFSET_UNITS, S_OFFSET_UNITS);
    let max_offset = (MAX_S_OFFSET_MS * fs / 1000.0).floor();
    let s_offset = (S_OFFSET_UNITS * unit_ms * fs / 1000.0).round().clamp(1.0, max_offset);
    let s_offset_ms = s_offset * 1000.0 / fs;
    let (mut lo, mut hi) = (0.25 * s_offset_ms, MAX_R_UPSTROKE_MS.max(s_offset_ms));
    for _ in 0..24 {
        let mid = 0.5 * (lo + hi);
        if qrs_width(&amps, mid, s_offset_ms) < p.qrs_duration {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r_shape = Shape::RaisedCosine { left: 0.5 * (lo + hi) * fs / 1000.0, right: s_offset };
    let s_shape = Shape::RaisedCosine { left: s_offset, right: s_offset };

    let mut pw = [0.0; 12];
    let mut tw = [0.0; 12];
    for (lead, angle) in LIMB_ANGLES {
        // P axis at 60° makes lead II carry the full planted amplitude.
        pw[lead.index()] = p.p_amp_ii * (P_AXIS_DEG - angle).to_radians().cos();
        tw[lead.index()] = T_AMP_MV * (T_AXIS_DEG - angle).to_radians().cos();
    }
    pw[Lead::V1.index()] = 0.5 * p.p_amp_ii;
    tw[Lead::V1.index()] = 0.5 * T_AMP_MV;
    for (lead, _) in PRECORDIAL_QRS {
        pw[lead.index()] = 0.5 * p.p_amp_ii;
        tw[lead.index()] = T_AMP_MV;
    }

    vec![
        Bump { offset: -samples(P_OFFSET_MS), shape: Shape::Gaussian { sigma: P_SIGMA_MS * fs / 1000.0 }, amp: pw },
        Bump { offset: 0, shape: r_shape, amp: amps.r },
        Bump { offset: s_offset as isize, shape: s_shape, amp: amps.s },
        Bump { offset: samples(T_OFFSET_MS), shape: Shape::Gaussian { sigma: T_SIGMA_MS * fs / 1000.0 }, amp: tw },
    ]
}

/// Planted beat positions: `round((phase + k) · RR · fs)`, keeping clear of the record ends.
pub fn planted_beats(p: &SynthParams) -> Vec<usize> {
    let fs = f64::from(p.sampling_rate);
    let rr = 60.0 / p.heart_rate;
    (0..)
        .map(|k| (p.phase + k as f64) * rr)
        .take_while(|&t| t <= p.duration - EDGE_GUARD_S)
        .filter(|&t| t >= EDGE_GUARD_S)
        .map(|t| (t * fs).round() as usize)
        .collect()
}

/// Renders a record and the flags its parameters are meant to trigger.
pub fn generate<T: Scalar>(record_id: &str, p: &SynthParams) -> Result<SynthRecord<T>> {
    p.validate()?;
    let fs = f64::from(p.sampling_rate);
    let n = (p.duration * fs).round() as usize;
    let mut signal = Array2::<f64>::zeros((12, n));
    let beats = planted_beats(p);
    let template = beat_template(p);
    for &b in &beats {
        for bump in &template {
            add_bump(&mut signal, b as isize + bump.offset, bump.shape, &bump.amp);
        }
    }
    if p.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let normal = Normal::new(0.0, p.noise_std).map_err(|e| Error::Config(e.to_string()))?;
        signal.mapv_inplace(|v| v + normal.sample(&mut rng));
    }
    let record = EcgRecord::new(record_id, p.sampling_rate, signal.mapv(T::lit))?;
    Ok(SynthRecord {
        record,
        params: p.clone(),
        intended: apply_thresholds(&p.criteria_inputs(), &CriteriaThresholds::default()),
        beat_indices: beats,
    })
}

/// Training-set beats sit at 60 bpm with the first R within ±30 ms of 0.5 s.
const PHASE_JITTER: f64 = 0.03;

fn side<R: Rng>(rng: &mut R, threshold: f64, margin: f64, lo: f64, hi: f64, above: bool) -> f64 {
    if above {
        rng.gen_range((threshold + margin)..=hi.max(threshold + margin))
    } else {
        rng.gen_range(lo.min(threshold - margin)..=(threshold - margin))
    }
}

/// Shared randomization for synthetic cohorts.
fn base_params<R: Rng>(rng: &mut R, seed: u64) -> SynthParams {
    SynthParams {
        heart_rate: rng.gen_range(50.0..=100.0),
        phase: rng.gen_range(0.0..1.0),
        seed,
        ..SynthParams::default()
    }
}

/// Balanced cohort: even indices positive (every RVH criterion met, RAE either way),
/// odd indices negative (no criterion met). Every planted value sits at least
/// `class_margin` tolerances away from its threshold. Beats are nearly aligned across
/// records so a dense network on raw samples can generalize from a few hundred.
pub fn generate_training_set<T: Scalar>(n: usize, class_margin: f64, seed: u64) -> Result<Vec<SynthRecord<T>>> {
    if n < 4 {
        return Err(Error::Config(format!("synthetic set needs n >= 4, got {n}")));
    }
    if !(class_margin > 0.0) {
        return Err(Error::Config("class margin must be positive".into()));
    }
    let t = CriteriaThresholds::default();
    let tol = MEASUREMENT_TOLERANCE;
    let m_amp = class_margin * tol.amplitude_mv;
    let m_axis = class_margin * tol.axis_deg;
    let m_qrs = class_margin * tol.qrs_ms;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    (0..n)
        .map(|i| {
            let positive = i % 2 == 0;
            let mut p = SynthParams {
                heart_rate: 60.0,
                phase: rng.gen_range(0.5 - PHASE_JITTER..=0.5 + PHASE_JITTER),
                seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
                ..SynthParams::default()
            };
            p.qrs_duration = side(&mut rng, t.narrow_qrs_ms, m_qrs, 60.0, 0.0, false);
            if positive {
                p.r_amp_v1 = side(&mut rng, t.tall_r_v1_mv, m_amp, 0.0, 1.6, true);
                p.s_amp_v1 = rng.gen_range(0.05..=(p.r_amp_v1 - m_amp).max(0.05));
                p.target_axis = side(&mut rng, t.rad_axis_deg, m_axis, 0.0, 170.0, true);
                let rae = rng.gen_bool(0.5);
                p.p_amp_ii = side(&mut rng, t.p_pulmonale_mv, m_amp, 0.05, 0.5, rae);
            } else {
                p.r_amp_v1 = side(&mut rng, t.tall_r_v1_mv, m_amp, 0.1, 0.0, false);
                p.s_amp_v1 = rng.gen_range((p.r_amp_v1 + m_amp)..=MAX_S_V1_MV.max(p.r_amp_v1 + m_amp));
                p.target_axis = side(&mut rng, t.rad_axis_deg, m_axis, -30.0, 0.0, false);
                p.p_amp_ii = side(&mut rng, t.p_pulmonale_mv, m_amp, 0.05, 0.0, false);
            }
            generate(&format!("synth-{seed}-{i:05}"), &p)
        })
        .collect()
}

/// Records whose parameters independently fall on either side of every threshold,
/// each at least `class_margin` tolerances away from it.
pub fn criteria_grid<T: Scalar>(
    cases: usize,
    class_margin: f64,
    noise_std: f64,
    sampling_rate: u32,
    seed: u64,
) -> Result<Vec<SynthRecord<T>>> {
    let t = CriteriaThresholds::default();
    let tol = MEASUREMENT_TOLERANCE;
    let m_amp = class_margin * tol.amplitude_mv;
    let m_axis = class_margin * tol.axis_deg;
    let m_qrs = class_margin * tol.qrs_ms;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..cases)
        .map(|i| {
            let mut p = base_params(&mut rng, seed.wrapping_mul(7_919).wrapping_add(i as u64));
            p.noise_std = noise_std;
            p.sampling_rate = sampling_rate;
            // Cycle through all 32 side combinations so every one is covered.
            let bits = i % 32;
            let bit = |k: usize| bits >> k & 1 == 1;
            p.r_amp_v1 = side(&mut rng, t.tall_r_v1_mv, m_amp, 0.15, 1.6, bit(0));
            p.s_amp_v1 = if bit(1) {
                rng.gen_range((p.r_amp_v1 + m_amp)..=(p.r_amp_v1 + 1.0).min(MAX_S_V1_MV).max(p.r_amp_v1 + m_amp))
            } else {
                let hi = p.r_amp_v1 - m_amp;
                if hi <= 0.0 { 0.0 } else { rng.gen_range(0.0..=hi) }
            };
            p.target_axis = side(&mut rng, t.rad_axis_deg, m_axis, -30.0, 170.0, bit(2));
            p.qrs_duration = side(&mut rng, t.narrow_qrs_ms, m_qrs, 70.0, 160.0, bit(3));
            p.p_amp_ii = side(&mut rng, t.p_pulmonale_mv, m_amp, 0.05, 0.5, bit(4));
            generate(&format!("grid-{seed}-{i:05}"), &p)
        })
        .collect()
}
