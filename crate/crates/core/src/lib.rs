//! Pulmonary-hypertension screening from 12-lead ECGs: WFDB ingest, preprocessing,
//! fiducial features with rule-based criteria, a dense network, and evaluation.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix
//! the precision used by the command-line tool.

// `!(x > 0.0)` is written on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod binfmt;
pub mod dnn;
pub mod error;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type Record = ingest::EcgRecord<Real>;
pub type Model = dnn::Mlp<Real>;
pub type Model32 = dnn::Mlp<f32>;
pub type Example = preprocess::LabeledExample<Real>;
pub type Stats = preprocess::NormStats<Real>;
pub type Fiducials = features::FiducialSet<Real>;
pub type SynthRecord = synth::SynthRecord<Real>;
