//! WFDB `.hea` header parsing.
//!
//! Only the subset PTB-XL uses is accepted: a single-segment record whose
//! twelve signals live in one format-16 file. Anything else fails loudly.

use std::fmt::Write as _;

use super::record::{Lead, LEAD_NAMES};
use crate::error::{Error, Result};

/// WFDB default ADC gain when a signal line omits it.
const DEFAULT_GAIN: f64 = 200.0;

pub const SUPPORTED_RATES: [u32; 2] = [100, 500];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StorageFormat {
    /// 16-bit little-endian two's complement, frame-interleaved.
    Fmt16,
}

impl StorageFormat {
    pub fn code(self) -> u16 {
        match self {
            StorageFormat::Fmt16 => 16,
        }
    }

    pub fn bytes_per_sample(self) -> usize {
        match self {
            StorageFormat::Fmt16 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadSpec {
    pub lead_name: String,
    pub storage_format: StorageFormat,
    /// ADC units per millivolt.
    pub adc_gain: f64,
    /// ADC value corresponding to 0 mV.
    pub baseline: i32,
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalHeader {
    pub record_id: String,
    pub num_leads: usize,
    pub sampling_rate: u32,
    pub samples_per_lead: usize,
    /// Signal lines in file order (which is also the frame interleave order).
    pub leads: Vec<LeadSpec>,
}

impl SignalHeader {
    /// For each signal line, the canonical row it maps to.
    pub fn canonical_rows(&self) -> Result<Vec<usize>> {
        let mut seen = [false; 12];
        let mut rows = Vec::with_capacity(self.leads.len());
        for spec in &self.leads {
            let lead = Lead::from_name(&spec.lead_name)
                .ok_or_else(|| Error::Format(format!("unknown lead name `{}`", spec.lead_name)))?;
            if std::mem::replace(&mut seen[lead.index()], true) {
                return Err(Error::Format(format!("lead `{}` listed twice", spec.lead_name)));
            }
            rows.push(lead.index());
        }
        Ok(rows)
    }

    /// Name of the single signal file all leads share.
    pub fn signal_file(&self) -> &str {
        &self.leads[0].file_name
    }

    /// Renders the header back to WFDB text.
    pub fn to_wfdb_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.record_id, self.num_leads, self.sampling_rate, self.samples_per_lead
        );
        for l in &self.leads {
            let _ = writeln!(
                out,
                "{} {} {}({})/mV 16 0 0 0 0 {}",
                l.file_name,
                l.storage_format.code(),
                fmt_gain(l.adc_gain),
                l.baseline,
                l.lead_name
            );
        }
        out
    }
}

fn fmt_gain(g: f64) -> String {
    if g.fract() == 0.0 {
        format!("{g:.1}")
    } else {
        format!("{g}")
    }
}

fn is_comment_or_blank(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Parses a WFDB header. Comment (`#`) and blank lines are ignored.
pub fn parse_header(raw: &[u8]) -> Result<SignalHeader> {
    let text = std::str::from_utf8(raw).map_err(|_| Error::Format("header is not UTF-8".into()))?;
    let mut lines = text.lines().filter(|l| !is_comment_or_blank(l));

    let first = lines
        .next()
        .ok_or_else(|| Error::Format("empty header".into()))?;
    let (record_id, num_leads, sampling_rate, samples_per_lead) = parse_record_line(first)?;

    let leads = lines.map(parse_signal_line).collect::<Result<Vec<_>>>()?;
    if leads.len() != num_leads {
        return Err(Error::Format(format!(
            "record line declares {num_leads} signals but {} signal lines follow",
            leads.len()
        )));
    }
    if num_leads != LEAD_NAMES.len() {
        return Err(Error::Format(format!(
            "expected a 12-lead record, found {num_leads} signals"
        )));
    }
    if leads.iter().any(|l| l.file_name != leads[0].file_name) {
        return Err(Error::UnsupportedFormat(
            "signals spread over several files".into(),
        ));
    }

    let header = SignalHeader {
        record_id,
        num_leads,
        sampling_rate,
        samples_per_lead,
        leads,
    };
    header.canonical_rows()?;
    Ok(header)
}

fn parse_record_line(line: &str) -> Result<(String, usize, u32, usize)> {
    let mut fields = line.split_whitespace();
    let name = fields
        .next()
        .ok_or_else(|| Error::Format("record line is empty".into()))?;
    if name.contains('/') {
        return Err(Error::UnsupportedFormat("multi-segment record".into()));
    }
    let num_leads: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad signal count in `{line}`")))?;

    // fs[/counter_freq[(base_counter)]]
    let fs_field = fields
        .next()
        .ok_or_else(|| Error::Format(format!("missing sampling frequency in `{line}`")))?;
    let fs: f64 = fs_field
        .split('/')
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad sampling frequency `{fs_field}`")))?;
    if fs.fract() != 0.0 || !SUPPORTED_RATES.contains(&(fs as u32)) {
        return Err(Error::UnsupportedFormat(format!(
            "sampling rate {fs} Hz (expected 100 or 500)"
        )));
    }

    let samples: usize = fields
        .next()
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::Format(format!("missing or bad sample count in `{line}`")))?;
    if samples == 0 {
        return Err(Error::Format("record declares zero samples".into()));
    }

    Ok((name.to_string(), num_leads, fs as u32, samples))
}

fn parse_signal_line(line: &str) -> Result<LeadSpec> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::Format(format!("signal line too short: `{line}`")));
    }
    let file_name = fields[0].to_string();
    let storage_format = parse_format(fields[1])?;

    let (adc_gain, explicit_baseline) = match fields.get(2) {
        Some(f) => parse_gain(f)?,
        None => (DEFAULT_GAIN, None),
    };
    // fields[3] is ADC resolution, fields[4] ADC zero; baseline defaults to ADC zero.
    let adc_zero = match fields.get(4) {
        Some(f) => Some(
            f.parse::<i32>()
                .map_err(|_| Error::Format(format!("bad ADC zero `{f}`")))?,
        ),
        None => None,
    };
    let baseline = explicit_baseline.or(adc_zero).unwrap_or(0);

    let lead_name = if fields.len() > 8 {
        fields[8..].join(" ")
    } else {
        return Err(Error::Format(format!("signal line lacks a lead description: `{line}`")));
    };

    Ok(LeadSpec {
        lead_name,
        storage_format,
        adc_gain,
        baseline,
        file_name,
    })
}

fn parse_format(field: &str) -> Result<StorageFormat> {
    // format[xsamples_per_frame][:skew][+byte_offset]
    let code_end = field
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(field.len());
    let code: u16 = field[..code_end]
        .parse()
        .map_err(|_| Error::Format(format!("bad storage format `{field}`")))?;
    if code != 16 {
        return Err(Error::UnsupportedFormat(format!("storage format {code}")));
    }
    let rest = &field[code_end..];
    for (tag, value) in split_modifiers(rest) {
        let unity = match tag {
            'x' => value == 1,
            ':' | '+' => value == 0,
            _ => false,
        };
        if !unity {
            return Err(Error::UnsupportedFormat(format!("format modifier in `{field}`")));
        }
    }
    Ok(StorageFormat::Fmt16)
}

fn split_modifiers(rest: &str) -> Vec<(char, i64)> {
    let mut out = Vec::new();
    let mut chars = rest.char_indices().peekable();
    while let Some((i, tag)) = chars.next() {
        let start = i + tag.len_utf8();
        let mut end = start;
        while let Some(&(j, c)) = chars.peek() {
            if c.is_ascii_digit() || (c == '-' && j == start) {
                end = j + 1;
                chars.next();
            } else {
                break;
            }
        }
        out.push((tag, rest[start..end].parse().unwrap_or(i64::MIN)));
    }
    out
}

fn parse_gain(field: &str) -> Result<(f64, Option<i32>)> {
    // gain[(baseline)][/units]
    let (value, units) = match field.split_once('/') {
        Some((v, u)) => (v, Some(u)),
        None => (field, None),
    };
    if let Some(u) = units {
        if u != "mV" {
            return Err(Error::UnsupportedFormat(format!("physical units `{u}`")));
        }
    }
    let (gain_str, baseline) = match value.split_once('(') {
        Some((g, b)) => {
            let b = b
                .strip_suffix(')')
                .ok_or_else(|| Error::Format(format!("unclosed baseline in `{field}`")))?;
            let b: i32 = b
                .parse()
                .map_err(|_| Error::Format(format!("bad baseline in `{field}`")))?;
            (g, Some(b))
        }
        None => (value, None),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| Error::Format(format!("bad ADC gain `{field}`")))?;
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Format(format!("ADC gain must be positive, got `{field}`")));
    }
    Ok((gain, baseline))
}

#[cfg(test)]
mod tests {
    use super::*;

    // Header of PTB-XL record 00001 (low resolution), as distributed.
    pub(crate) const PTBXL_00001_LR: &str = "\
00001_lr 12 100 1000
00001_lr.dat 16 1000.0(0)/mV 16 0 -119 1508 0 I
00001_lr.dat 16 1000.0(0)/mV 16 0 -55 723 0 II
00001_lr.dat 16 1000.0(0)/mV 16 0 64 64758 0 III
00001_lr.dat 16 1000.0(0)/mV 16 0 86 64423 0 AVR
00001_lr.dat 16 1000.0(0)/mV 16 0 -91 1211 0 AVL
00001_lr.dat 16 1000.0(0)/mV 16 0 4 7 0 AVF
00001_lr.dat 16 1000.0(0)/mV 16 0 -69 63827 0 V1
00001_lr.dat 16 1000.0(0)/mV 16 0 -31 6999 0 V2
00001_lr.dat 16 1000.0(0)/mV 16 0 0 63759 0 V3
00001_lr.dat 16 1000.0(0)/mV 16 0 -26 61447 0 V4
00001_lr.dat 16 1000.0(0)/mV 16 0 -39 64979 0 V5
00001_lr.dat 16 1000.0(0)/mV 16 0 -79 832 0 V6
";

    #[test]
    fn parses_ptbxl_low_res_header() {
        let h = parse_header(PTBXL_00001_LR.as_bytes()).unwrap();
        assert_eq!(h.record_id, "00001_lr");
        assert_eq!(h.num_leads, 12);
        assert_eq!(h.sampling_rate, 100);
        assert_eq!(h.samples_per_lead, 1000);
        assert_eq!(h.leads[3].lead_name, "AVR");
        assert_eq!(h.leads[0].adc_gain, 1000.0);
        assert_eq!(h.leads[0].baseline, 0);
        assert_eq!(h.signal_file(), "00001_lr.dat");
        assert_eq!(h.canonical_rows().unwrap(), (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn parses_high_res_rate() {
        let text = PTBXL_00001_LR
            .replace("00001_lr 12 100 1000", "00001_hr 12 500 5000")
            .replace("_lr.dat", "_hr.dat");
        let h = parse_header(text.as_bytes()).unwrap();
        assert_eq!(h.sampling_rate, 500);
        assert_eq!(h.samples_per_lead, 5000);
    }

    #[test]
    fn comments_are_ignored() {
        let text = format!("# leading comment\n{PTBXL_00001_LR}# age: 56\n# sex: female\n");
        assert!(parse_header(text.as_bytes()).is_ok());
    }

    #[test]
    fn missing_signal_line_is_format_error() {
        let text: String = PTBXL_00001_LR.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn malformed_first_line_is_format_error() {
        let text = PTBXL_00001_LR.replace("00001_lr 12 100 1000", "00001_lr twelve");
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::Format(_))));
        let text = PTBXL_00001_LR.replace("00001_lr 12 100 1000", "00001_lr 12 100");
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn other_storage_formats_are_rejected() {
        let text = PTBXL_00001_LR.replace(".dat 16 ", ".dat 212 ");
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::UnsupportedFormat(_))));
        let text = PTBXL_00001_LR.replace(".dat 16 ", ".dat 16x2 ");
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::UnsupportedFormat(_))));
        let text = PTBXL_00001_LR.replace(".dat 16 ", ".dat 16+0 ");
        assert!(parse_header(text.as_bytes()).is_ok());
    }

    #[test]
    fn baseline_falls_back_to_adc_zero() {
        let text = PTBXL_00001_LR.replace("1000.0(0)/mV 16 0", "500/mV 16 12");
        let h = parse_header(text.as_bytes()).unwrap();
        assert_eq!(h.leads[0].adc_gain, 500.0);
        assert_eq!(h.leads[0].baseline, 12);
    }

    #[test]
    fn zero_gain_is_rejected() {
        let text = PTBXL_00001_LR.replace("1000.0(0)/mV", "0(0)/mV");
        assert!(matches!(parse_header(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn rendering_reparses() {
        let h = parse_header(PTBXL_00001_LR.as_bytes()).unwrap();
        let again = parse_header(h.to_wfdb_string().as_bytes()).unwrap();
        assert_eq!(h, again);
    }
}
