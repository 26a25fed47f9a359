//! WFDB record decoding and PTB-XL catalog handling.

mod cohort;
mod header;
mod metadata;
mod record;
mod signal;

use std::path::Path;

pub use cohort::{
    select_cohort, CohortCatalog, CohortConfig, ControlPolicy, SubLabels, CODE_NORM, CODE_RAE,
    CODE_RVH,
};
pub use header::{parse_header, LeadSpec, SignalHeader, StorageFormat, SUPPORTED_RATES};
pub use metadata::{load_metadata, parse_code_map, LoadOptions, RecordMeta, Sex};
pub use record::{EcgRecord, Lead, LEAD_NAMES};
pub use signal::{decode_adc, decode_signal, encode_record};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reads `<base>.hea` and the signal file it names (resolved next to the header).
/// `base` may be given with or without the `.hea` extension.
pub fn read_record<T: Scalar>(base: &Path) -> Result<EcgRecord<T>> {
    let hea = if base.extension().is_some_and(|e| e == "hea") {
        base.to_path_buf()
    } else {
        base.with_file_name(format!(
            "{}.hea",
            base.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
        ))
    };
    let header_bytes = std::fs::read(&hea).map_err(|e| Error::io(&hea, e))?;
    let header = parse_header(&header_bytes)?;
    let dat = hea.with_file_name(header.signal_file());
    let raw = std::fs::read(&dat).map_err(|e| Error::io(&dat, e))?;
    decode_signal(&raw, &header)
}

/// Writes `<dir>/<name>.hea` and `<dir>/<name>.dat`.
pub fn write_record<T: Scalar>(
    record: &EcgRecord<T>,
    dir: &Path,
    name: &str,
    adc_gain: f64,
) -> Result<()> {
    let (header, bytes) = encode_record(record, name, adc_gain, 0)?;
    let hea = dir.join(format!("{name}.hea"));
    let dat = dir.join(header.signal_file());
    std::fs::write(&hea, header.to_wfdb_string()).map_err(|e| Error::io(&hea, e))?;
    std::fs::write(&dat, bytes).map_err(|e| Error::io(&dat, e))?;
    Ok(())
}
