//! Beat detection, fiducial measurements and the rule-based RVH/RAE criteria.

mod axis;
mod beats;
mod criteria;
mod peaks;

pub use axis::frontal_axis;
pub use beats::{detection_signal, extract_fiducials, measure_beats, FiducialSet, MeasureConfig};
pub use criteria::{
    apply_thresholds, evaluate_criteria, CriteriaInputs, CriteriaResult, CriteriaThresholds,
};
pub use peaks::{
    detect_r_peaks, detect_r_peaks_with, integrated_energy, DetectorConfig, MIN_DETECTION_SECS,
};
