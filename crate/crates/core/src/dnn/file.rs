//! Model file.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `ECGM` |
//! | 2     | `u16` version (= 1) |
//! | 1     | hidden activation (0 = ReLU) |
//! | 1     | output activation (0 = sigmoid) |
//! | 4     | `u32` layer count `L` |
//! | 4 × L | `u32` layer sizes |
//! | …     | per layer: weights row-major (`out × in` × `f64`), then biases (`out` × `f64`) |
//! | 1     | `u8` 1 if a preprocessing block follows, else 0 |
//! | …     | preprocessing: `u32` sampling rate, `u8` demographics flag, `u32` lead count `k`, `k` × `f64` means, `k` × `f64` stds, `u8` demographic-stats flag, then 4 × `f64` means and 4 × `f64` stds if set |
//! | 8     | `u64` CRC-64/XZ of every preceding byte |

use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{HiddenActivation, Mlp, OutputActivation};
use crate::binfmt::{write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::preprocess::{DemographicStats, NormStats, DEMOGRAPHIC_FEATURES};
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &[u8; 4] = b"ECGM";
pub const MODEL_VERSION: u16 = 1;

/// Input transform the model was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessing<T> {
    pub sampling_rate: u32,
    pub include_demographics: bool,
    pub stats: NormStats<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile<T> {
    pub model: Mlp<T>,
    pub preprocessing: Option<Preprocessing<T>>,
}

fn put_all<T: Scalar>(e: &mut Encoder, values: impl IntoIterator<Item = T>) {
    for v in values {
        e.f64(v.to_f64_lossless());
    }
}

fn get_all<T: Scalar>(d: &mut Decoder, n: usize) -> Result<Vec<T>> {
    (0..n).map(|_| d.f64().map(T::from_f64_lossy)).collect()
}

pub fn encode_model<T: Scalar>(file: &ModelFile<T>) -> Result<Vec<u8>> {
    let m = &file.model;
    let mut e = Encoder::new(MODEL_MAGIC, MODEL_VERSION);
    e.u8(match m.hidden_activation() {
        HiddenActivation::Relu => 0,
    });
    e.u8(match m.output_activation() {
        OutputActivation::Sigmoid => 0,
    });
    e.len_u32(m.layer_sizes().len())?;
    for &s in m.layer_sizes() {
        e.len_u32(s)?;
    }
    for (w, b) in m.weights().iter().zip(m.biases()) {
        put_all(&mut e, w.iter().copied());
        put_all(&mut e, b.iter().copied());
    }
    match &file.preprocessing {
        None => e.u8(0),
        Some(p) => {
            e.u8(1);
            e.u32(p.sampling_rate);
            e.u8(u8::from(p.include_demographics));
            if p.stats.mean.len() != p.stats.std.len() {
                return Err(Error::Shape(format!(
                    "{} lead means, {} lead stds",
                    p.stats.mean.len(),
                    p.stats.std.len()
                )));
            }
            e.len_u32(p.stats.mean.len())?;
            put_all(&mut e, p.stats.mean.iter().copied());
            put_all(&mut e, p.stats.std.iter().copied());
            match &p.stats.demographics {
                None => e.u8(0),
                Some(d) => {
                    e.u8(1);
                    put_all(&mut e, d.mean);
                    put_all(&mut e, d.std);
                }
            }
        }
    }
    Ok(e.finish())
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<ModelFile<T>> {
    let mut d = Decoder::open(bytes, MODEL_MAGIC, MODEL_VERSION, "model file")?;
    let corrupt = |m: String| Error::CorruptCache(format!("model file: {m}"));
    let hidden = d.u8()?;
    let output = d.u8()?;
    if hidden != 0 || output != 0 {
        return Err(corrupt(format!("unknown activation codes {hidden}/{output}")));
    }
    let layers = d.u32()? as usize;
    // Each size takes 4 bytes, which bounds any sane count by the file length.
    if layers < 2 || layers > bytes.len() / 4 {
        return Err(corrupt(format!("implausible layer count {layers}")));
    }
    let sizes: Vec<usize> = (0..layers).map(|_| d.u32().map(|s| s as usize)).collect::<Result<_>>()?;
    let params: usize = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
    if params > bytes.len() / 8 {
        return Err(corrupt(format!("layer sizes {sizes:?} exceed the file length")));
    }
    let mut weights = Vec::with_capacity(layers - 1);
    let mut biases = Vec::with_capacity(layers - 1);
    for w in sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let flat = get_all::<T>(&mut d, fan_in * fan_out)?;
        weights.push(Array2::from_shape_vec((fan_out, fan_in), flat).map_err(|e| corrupt(e.to_string()))?);
        biases.push(Array1::from(get_all::<T>(&mut d, fan_out)?));
    }
    let model = Mlp::from_parts(weights, biases).map_err(|e| corrupt(e.to_string()))?;

    let preprocessing = if d.bool()? {
        let sampling_rate = d.u32()?;
        let include_demographics = d.bool()?;
        let k = d.u32()? as usize;
        if k > bytes.len() / 16 {
            return Err(corrupt(format!("implausible lead count {k}")));
        }
        let mean = get_all(&mut d, k)?;
        let std = get_all(&mut d, k)?;
        let demographics = if d.bool()? {
            let m = get_all(&mut d, DEMOGRAPHIC_FEATURES)?;
            let s = get_all(&mut d, DEMOGRAPHIC_FEATURES)?;
            Some(DemographicStats {
                mean: m.try_into().expect("fixed length"),
                std: s.try_into().expect("fixed length"),
            })
        } else {
            None
        };
        Some(Preprocessing { sampling_rate, include_demographics, stats: NormStats { mean, std, demographics } })
    } else {
        None
    };
    d.finish()?;
    Ok(ModelFile { model, preprocessing })
}

pub fn save_model<T: Scalar>(file: &ModelFile<T>, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(file)?)
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<ModelFile<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile<f64> {
        ModelFile {
            model: Mlp::new(&[3, 2, 1], 5).unwrap(),
            preprocessing: Some(Preprocessing {
                sampling_rate: 100,
                include_demographics: true,
                stats: NormStats {
                    mean: vec![0.1; 12],
                    std: vec![0.3; 12],
                    demographics: Some(DemographicStats { mean: [60.0, 0.5, 170.0, 75.0], std: [10.0, 0.5, 9.0, 12.0] }),
                },
            }),
        }
    }

    #[test]
    fn header_bytes() {
        let bytes = encode_model(&sample()).unwrap();
        assert_eq!(&bytes[..4], b"ECGM");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..8], &[0, 0]);
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        // 3 sizes, then the first weight as f64.
        let w0 = sample().model.weights()[0][[0, 0]];
        assert_eq!(&bytes[24..32], &w0.to_le_bytes());
    }

    #[test]
    fn round_trip_without_preprocessing() {
        let f = ModelFile { model: Mlp::<f32>::new(&[4, 1], 2).unwrap(), preprocessing: None };
        assert_eq!(decode_model::<f32>(&encode_model(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn version_checked() {
        let mut bytes = encode_model(&sample()).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_model::<f64>(&bytes), Err(Error::Version { found: 2, supported: 1 })));
    }
}
