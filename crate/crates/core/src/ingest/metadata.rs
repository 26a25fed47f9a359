//! PTB-XL style metadata catalog (`ptbxl_database.csv`).

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub record_id: String,
    pub age: Option<f64>,
    pub sex: Sex,
    /// cm
    pub height: Option<f64>,
    /// kg
    pub weight: Option<f64>,
    /// SCP statement → likelihood in `[0, 100]`.
    pub scp_codes: BTreeMap<String, f64>,
    /// Relative path (without extension) of the 100 Hz record, when listed.
    pub filename_lr: Option<String>,
    /// Relative path (without extension) of the 500 Hz record, when listed.
    pub filename_hr: Option<String>,
}

impl RecordMeta {
    pub fn new(record_id: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            age: None,
            sex: Sex::Unknown,
            height: None,
            weight: None,
            scp_codes: BTreeMap::new(),
            filename_lr: None,
            filename_hr: None,
        }
    }

    pub fn with_code(mut self, code: &str, likelihood: f64) -> Self {
        self.scp_codes.insert(code.to_string(), likelihood);
        self
    }

    /// Record path for the requested sampling rate.
    pub fn filename_for_rate(&self, rate: u32) -> Option<&str> {
        match rate {
            100 => self.filename_lr.as_deref(),
            500 => self.filename_hr.as_deref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip rows whose diagnostic map or numeric fields fail to parse.
    pub lenient: bool,
}

const ID_COLUMNS: [&str; 2] = ["ecg_id", "record_id"];
const REQUIRED: [&str; 5] = ["age", "sex", "height", "weight", "scp_codes"];

/// Parses the metadata table. Missing numeric fields stay `None`.
pub fn load_metadata(csv_bytes: &[u8], opts: LoadOptions) -> Result<Vec<RecordMeta>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(csv_bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::Row {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);

    let id_col = ID_COLUMNS
        .iter()
        .find_map(|c| col(c))
        .ok_or_else(|| Error::Schema(ID_COLUMNS.join("|")))?;
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| Error::Schema(name.to_string()))?;
    }
    let [age_c, sex_c, height_c, weight_c, scp_c] = idx;
    let lr_c = col("filename_lr");
    let hr_c = col("filename_hr");

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let parsed = rec
            .map_err(|e| Error::Row {
                row,
                message: e.to_string(),
            })
            .and_then(|rec| {
                let field = |c: usize| rec.get(c).unwrap_or("").trim();
                let row_err = |message: String| Error::Row { row, message };
                let record_id = normalize_id(field(id_col));
                if record_id.is_empty() {
                    return Err(row_err("empty record id".into()));
                }
                let opt_path = |c: Option<usize>| {
                    c.map(field).filter(|s| !s.is_empty()).map(str::to_string)
                };
                Ok(RecordMeta {
                    age: parse_opt_num(field(age_c)).map_err(row_err)?,
                    sex: parse_sex(field(sex_c)).map_err(row_err)?,
                    height: parse_opt_num(field(height_c)).map_err(row_err)?,
                    weight: parse_opt_num(field(weight_c)).map_err(row_err)?,
                    scp_codes: parse_code_map(field(scp_c)).map_err(row_err)?,
                    filename_lr: opt_path(lr_c),
                    filename_hr: opt_path(hr_c),
                    record_id,
                })
            });
        match parsed {
            Ok(meta) => {
                if !seen.insert(meta.record_id.clone()) {
                    let err = Error::Row {
                        row,
                        message: format!("duplicate record id {}", meta.record_id),
                    };
                    if opts.lenient {
                        continue;
                    }
                    return Err(err);
                }
                out.push(meta);
            }
            Err(_) if opts.lenient => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

// PTB-XL writes ids as integers, sometimes as "1.0".
fn normalize_id(raw: &str) -> String {
    match raw.strip_suffix(".0") {
        Some(int) if !int.is_empty() && int.bytes().all(|b| b.is_ascii_digit()) => int.to_string(),
        _ => raw.to_string(),
    }
}

fn parse_opt_num(s: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("not a number: `{s}`"))
}

fn parse_sex(s: &str) -> std::result::Result<Sex, String> {
    // PTB-XL: 0 = male, 1 = female.
    match s {
        "" => Ok(Sex::Unknown),
        "0" | "0.0" | "M" | "m" | "male" => Ok(Sex::M),
        "1" | "1.0" | "F" | "f" | "female" => Ok(Sex::F),
        other => Err(format!("unrecognized sex `{other}`")),
    }
}

/// Parses a serialized map literal such as `{'NORM': 100.0, 'SR': 0.0}`.
/// Single or double quotes are accepted.
pub fn parse_code_map(s: &str) -> std::result::Result<BTreeMap<String, f64>, String> {
    let inner = s
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| format!("diagnostic map is not a `{{...}}` literal: `{s}`"))?;
    let mut map = BTreeMap::new();
    if inner.trim().is_empty() {
        return Ok(map);
    }
    for entry in inner.split(',') {
        let (key, value) = entry
            .split_once(':')
            .ok_or_else(|| format!("entry without `:` in `{s}`"))?;
        let key = key.trim();
        let unquoted = ['\'', '"']
            .iter()
            .find_map(|q| key.strip_prefix(*q).and_then(|k| k.strip_suffix(*q)))
            .ok_or_else(|| format!("unquoted code `{key}`"))?;
        let likelihood: f64 = value
            .trim()
            .parse()
            .map_err(|_| format!("bad likelihood `{}` for {unquoted}", value.trim()))?;
        if !(0.0..=100.0).contains(&likelihood) {
            return Err(format!("likelihood {likelihood} for {unquoted} outside [0, 100]"));
        }
        map.insert(unquoted.to_string(), likelihood);
    }
    Ok(map)
}
