//! Format-16 signal decoding and encoding.

use ndarray::Array2;

use super::header::{LeadSpec, SignalHeader, StorageFormat};
use super::record::EcgRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Raw ADC values, one row per signal line in header order.
pub fn decode_adc(raw: &[u8], header: &SignalHeader) -> Result<Vec<Vec<i16>>> {
    let n_leads = header.leads.len();
    let bytes_per = StorageFormat::Fmt16.bytes_per_sample();
    let expected = n_leads * header.samples_per_lead * bytes_per;
    if raw.len() != expected {
        return Err(Error::TruncatedSignal {
            expected,
            found: raw.len(),
        });
    }
    let mut rows = vec![Vec::with_capacity(header.samples_per_lead); n_leads];
    for frame in raw.chunks_exact(n_leads * bytes_per) {
        for (lead, pair) in frame.chunks_exact(bytes_per).enumerate() {
            rows[lead].push(i16::from_le_bytes([pair[0], pair[1]]));
        }
    }
    Ok(rows)
}

/// Decodes a signal file into a calibrated record, `(adc - baseline) / gain` mV,
/// with rows reordered to the canonical lead order.
pub fn decode_signal<T: Scalar>(raw: &[u8], header: &SignalHeader) -> Result<EcgRecord<T>> {
    let adc = decode_adc(raw, header)?;
    let rows = header.canonical_rows()?;
    let n = header.samples_per_lead;
    let mut samples = Array2::<T>::zeros((rows.len(), n));
    for ((spec, values), &row) in header.leads.iter().zip(&adc).zip(&rows) {
        let gain = T::lit(spec.adc_gain);
        for (i, &v) in values.iter().enumerate() {
            let mv = T::lit(f64::from(i32::from(v) - spec.baseline)) / gain;
            if !mv.is_finite() {
                return Err(Error::Calibration {
                    lead: row,
                    sample: i,
                });
            }
            samples[[row, i]] = mv;
        }
    }
    EcgRecord::new(header.record_id.clone(), header.sampling_rate, samples)
}

/// Quantizes a record to format 16 with a shared gain and baseline.
/// Returns the header and the interleaved little-endian payload.
pub fn encode_record<T: Scalar>(
    record: &EcgRecord<T>,
    record_name: &str,
    adc_gain: f64,
    baseline: i32,
) -> Result<(SignalHeader, Vec<u8>)> {
    if !(adc_gain > 0.0 && adc_gain.is_finite()) {
        return Err(Error::Config(format!("ADC gain must be positive, got {adc_gain}")));
    }
    let file_name = format!("{record_name}.dat");
    let leads = record
        .lead_names()
        .iter()
        .map(|name| LeadSpec {
            lead_name: name.to_string(),
            storage_format: StorageFormat::Fmt16,
            adc_gain,
            baseline,
            file_name: file_name.clone(),
        })
        .collect::<Vec<_>>();
    let header = SignalHeader {
        record_id: record_name.to_string(),
        num_leads: leads.len(),
        sampling_rate: record.sampling_rate(),
        samples_per_lead: record.len(),
        leads,
    };
    let samples = record.samples();
    let mut bytes = Vec::with_capacity(samples.len() * 2);
    for i in 0..record.len() {
        for lead in 0..samples.nrows() {
            let adc = (samples[[lead, i]].to_f64_lossless() * adc_gain).round() + f64::from(baseline);
            // -32768 is the WFDB invalid-sample marker.
            let adc = adc.clamp(-32767.0, 32767.0) as i16;
            bytes.extend_from_slice(&adc.to_le_bytes());
        }
    }
    Ok((header, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::header::parse_header;

    fn header_with(gain: f64, baseline: i32, samples: usize) -> SignalHeader {
        let leads = crate::ingest::LEAD_NAMES
            .iter()
            .map(|n| LeadSpec {
                lead_name: n.to_string(),
                storage_format: StorageFormat::Fmt16,
                adc_gain: gain,
                baseline,
                file_name: "r.dat".into(),
            })
            .collect();
        SignalHeader {
            record_id: "r".into(),
            num_leads: 12,
            sampling_rate: 100,
            samples_per_lead: samples,
            leads,
        }
    }

    fn frame_bytes(values: &[i16]) -> Vec<u8> {
        values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    #[test]
    fn zero_and_unit_calibration() {
        let h = header_with(1000.0, 0, 1);
        let mut frame = [0i16; 12];
        frame[1] = 1000;
        let rec = decode_signal::<f64>(&frame_bytes(&frame), &h).unwrap();
        assert_eq!(rec.samples()[[0, 0]], 0.0);
        assert_eq!(rec.samples()[[1, 0]], 1.0);
    }

    #[test]
    fn baseline_is_subtracted() {
        let h = header_with(200.0, -100, 1);
        let rec = decode_signal::<f64>(&frame_bytes(&[100; 12]), &h).unwrap();
        assert_eq!(rec.samples()[[5, 0]], 1.0);
    }

    #[test]
    fn byte_length_mismatch_is_truncation() {
        let h = header_with(1000.0, 0, 2);
        let err = decode_signal::<f64>(&frame_bytes(&[0; 23]), &h).unwrap_err();
        assert!(matches!(err, Error::TruncatedSignal { expected: 48, found: 46 }));
    }

    #[test]
    fn zero_gain_is_a_calibration_error() {
        let h = header_with(0.0, 0, 1);
        let err = decode_signal::<f64>(&frame_bytes(&[0; 12]), &h).unwrap_err();
        assert!(matches!(err, Error::Calibration { .. }));
    }

    #[test]
    fn non_canonical_lead_order_is_reordered() {
        let mut h = header_with(1.0, 0, 1);
        h.leads.swap(0, 11);
        let values: Vec<i16> = (0..12).collect();
        let rec = decode_signal::<f64>(&frame_bytes(&values), &h).unwrap();
        // File column 0 is V6, column 11 is I.
        assert_eq!(rec.samples()[[11, 0]], 0.0);
        assert_eq!(rec.samples()[[0, 0]], 11.0);
        assert_eq!(rec.samples()[[5, 0]], 5.0);
    }

    #[test]
    fn f32_decode_matches_f64() {
        let h = header_with(1000.0, 0, 1);
        let values: Vec<i16> = (0..12).map(|i| i * 37 - 200).collect();
        let a = decode_signal::<f32>(&frame_bytes(&values), &h).unwrap();
        let b = decode_signal::<f64>(&frame_bytes(&values), &h).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(*x, *y as f32);
        }
    }

    #[test]
    fn encode_then_parse_and_decode() {
        let h = header_with(1000.0, 0, 3);
        let values: Vec<i16> = (0..36).map(|i| (i * 91 - 1500) as i16).collect();
        let raw = frame_bytes(&values);
        let rec = decode_signal::<f64>(&raw, &h).unwrap();
        let (h2, raw2) = encode_record(&rec, "r", 1000.0, 0).unwrap();
        assert_eq!(raw, raw2);
        let reparsed = parse_header(h2.to_wfdb_string().as_bytes()).unwrap();
        assert_eq!(reparsed, h2);
    }
}
