use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Canonical 12-lead order. Every [`EcgRecord`] stores its rows in this order.
pub const LEAD_NAMES: [&str; 12] = [
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6",
];

/// Position of a lead in [`LEAD_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lead {
    I = 0,
    II,
    III,
    AVR,
    AVL,
    AVF,
    V1,
    V2,
    V3,
    V4,
    V5,
    V6,
}

impl Lead {
    pub const ALL: [Lead; 12] = [
        Lead::I,
        Lead::II,
        Lead::III,
        Lead::AVR,
        Lead::AVL,
        Lead::AVF,
        Lead::V1,
        Lead::V2,
        Lead::V3,
        Lead::V4,
        Lead::V5,
        Lead::V6,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        LEAD_NAMES[self.index()]
    }

    /// Case-insensitive lookup (`AVR`, `avr` and `aVR` are the same lead).
    pub fn from_name(name: &str) -> Option<Lead> {
        LEAD_NAMES
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name.trim()))
            .map(|i| Lead::ALL[i])
    }
}

/// A calibrated 12-lead recording in millivolts.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord<T> {
    record_id: String,
    sampling_rate: u32,
    samples: Array2<T>,
}

impl<T: Scalar> EcgRecord<T> {
    /// Builds a record from a `12 × N` matrix in canonical lead order.
    pub fn new(record_id: impl Into<String>, sampling_rate: u32, samples: Array2<T>) -> Result<Self> {
        if samples.nrows() != LEAD_NAMES.len() {
            return Err(Error::Shape(format!(
                "record needs {} leads, got {}",
                LEAD_NAMES.len(),
                samples.nrows()
            )));
        }
        if samples.ncols() == 0 {
            return Err(Error::Shape("record has no samples".into()));
        }
        if sampling_rate == 0 {
            return Err(Error::Config("sampling rate must be positive".into()));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            let n = samples.ncols();
            return Err(Error::Calibration {
                lead: pos / n,
                sample: pos % n,
            });
        }
        Ok(Self {
            record_id: record_id.into(),
            sampling_rate,
            samples,
        })
    }

    /// Same samples under a different identifier (e.g. the catalog id instead of the file stem).
    pub fn with_record_id(mut self, record_id: impl Into<String>) -> Self {
        self.record_id = record_id.into();
        self
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn sampling_rate(&self) -> u32 {
        self.sampling_rate
    }

    pub fn lead_names(&self) -> &'static [&'static str; 12] {
        &LEAD_NAMES
    }

    /// Samples per lead.
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.ncols() == 0
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / f64::from(self.sampling_rate)
    }

    pub fn samples(&self) -> &Array2<T> {
        &self.samples
    }

    pub fn lead(&self, lead: Lead) -> ArrayView1<'_, T> {
        self.samples.row(lead.index())
    }

    pub fn into_samples(self) -> Array2<T> {
        self.samples
    }
}
