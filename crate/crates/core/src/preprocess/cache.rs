//! Binary dataset cache.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `ECGP` |
//! | 2     | `u16` version (= 1) |
//! | 4     | `u32` example count `n` |
//! | 4     | `u32` input length `d` |
//! | 8     | `f64` split fraction |
//! | 8     | `u64` split seed |
//! | 12    | `u32` train, validation, test counts |
//! | n × … | per example: `u16` id length, id bytes (UTF-8), `u8` label, `u8` rvh, `u8` rae, `d` × `f64` input |
//! | 4 × … | train, validation, test members as `u32` indices into the example list |
//! | 8     | `u64` CRC-64/XZ of every preceding byte |

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array1;

use super::examples::LabeledExample;
use super::split::DatasetSplit;
use crate::binfmt::{write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::ingest::SubLabels;
use crate::scalar::Scalar;

pub const CACHE_MAGIC: &[u8; 4] = b"ECGP";
pub const CACHE_VERSION: u16 = 1;

pub fn encode_cache<T: Scalar>(examples: &[LabeledExample<T>], split: &DatasetSplit) -> Result<Vec<u8>> {
    let d = examples.first().map_or(0, |e| e.input.len());
    if let Some(e) = examples.iter().find(|e| e.input.len() != d) {
        return Err(Error::Shape(format!(
            "example {} has input length {}, expected {d}",
            e.record_id,
            e.input.len()
        )));
    }
    let index: HashMap<&str, usize> = examples
        .iter()
        .enumerate()
        .map(|(i, e)| (e.record_id.as_str(), i))
        .collect();
    if index.len() != examples.len() {
        return Err(Error::Config("duplicate record ids in dataset".into()));
    }

    let mut enc = Encoder::new(CACHE_MAGIC, CACHE_VERSION);
    enc.len_u32(examples.len())?;
    enc.len_u32(d)?;
    enc.f64(split.fraction);
    enc.u64(split.seed);
    enc.len_u32(split.train_ids.len())?;
    enc.len_u32(split.val_ids.len())?;
    enc.len_u32(split.test_ids.len())?;
    for e in examples {
        enc.str16(&e.record_id)?;
        enc.u8(u8::from(e.label));
        enc.u8(u8::from(e.sub_labels.rvh));
        enc.u8(u8::from(e.sub_labels.rae));
        for v in &e.input {
            enc.f64(v.to_f64_lossless());
        }
    }
    for id in split.train_ids.iter().chain(&split.val_ids).chain(&split.test_ids) {
        let i = index
            .get(id.as_str())
            .ok_or_else(|| Error::Config(format!("split references unknown record {id}")))?;
        enc.len_u32(*i)?;
    }
    Ok(enc.finish())
}

pub fn decode_cache<T: Scalar>(bytes: &[u8]) -> Result<(Vec<LabeledExample<T>>, DatasetSplit)> {
    let mut dec = Decoder::open(bytes, CACHE_MAGIC, CACHE_VERSION, "cache")?;
    let n = dec.u32()? as usize;
    let d = dec.u32()? as usize;
    let fraction = dec.f64()?;
    let seed = dec.u64()?;
    let counts = [dec.u32()? as usize, dec.u32()? as usize, dec.u32()? as usize];

    let mut examples = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let record_id = dec.str16()?;
        let label = dec.bool()?;
        let sub_labels = SubLabels {
            rvh: dec.bool()?,
            rae: dec.bool()?,
        };
        let input = (0..d)
            .map(|_| dec.f64().map(T::from_f64_lossy))
            .collect::<Result<Vec<_>>>()?;
        examples.push(LabeledExample {
            record_id,
            input: Array1::from(input),
            label,
            sub_labels,
        });
    }
    let mut groups: [Vec<String>; 3] = Default::default();
    for (group, &count) in groups.iter_mut().zip(&counts) {
        for _ in 0..count {
            let i = dec.u32()? as usize;
            let e = examples
                .get(i)
                .ok_or_else(|| Error::CorruptCache(format!("cache: split index {i} out of range")))?;
            group.push(e.record_id.clone());
        }
    }
    dec.finish()?;
    let [train_ids, val_ids, test_ids] = groups;
    Ok((
        examples,
        DatasetSplit {
            train_ids,
            val_ids,
            test_ids,
            fraction,
            seed,
        },
    ))
}

pub fn cache_write<T: Scalar>(examples: &[LabeledExample<T>], split: &DatasetSplit, path: &Path) -> Result<()> {
    write_atomic(path, &encode_cache(examples, split)?)
}

pub fn cache_read<T: Scalar>(path: &Path) -> Result<(Vec<LabeledExample<T>>, DatasetSplit)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_cache(&bytes)
}
