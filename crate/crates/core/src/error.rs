use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WFDB header: {0}")]
    Format(String),

    #[error("unsupported WFDB storage: {0}")]
    UnsupportedFormat(String),

    #[error("signal file truncated: expected {expected} bytes, found {found}")]
    TruncatedSignal { expected: usize, found: usize },

    #[error("calibration produced a non-finite value in lead {lead} at sample {sample}")]
    Calibration { lead: usize, sample: usize },

    #[error("metadata is missing required column `{0}`")]
    Schema(String),

    #[error("metadata row {row}: {message}")]
    Row { row: usize, message: String },

    #[error("cohort selection found no positive records")]
    EmptyCohort,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("need at least 2 examples to split, got {0}")]
    TooFewExamples(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("corrupt {0}")]
    CorruptCache(String),

    #[error("unsupported file version {found} (this build reads {supported})")]
    Version { found: u16, supported: u16 },

    #[error("signal too short for beat detection: {seconds:.2} s (need 2 s)")]
    TooShort { seconds: f64 },

    #[error("no beats detected")]
    NoBeats,

    #[error("net QRS vector below floor, axis undefined")]
    AxisUndefined,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("ROC undefined: labels contain a single class")]
    UndefinedRoc,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
