use serde::{Deserialize, Serialize};

use super::beats::FiducialSet;
use crate::scalar::Scalar;

/// Decision thresholds of the rule-based RVH/RAE screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaThresholds {
    /// Right axis deviation when the axis exceeds this (degrees).
    pub rad_axis_deg: f64,
    /// Tall R in V1 at or above this (mV).
    pub tall_r_v1_mv: f64,
    /// Narrow QRS strictly below this (ms).
    pub narrow_qrs_ms: f64,
    /// P pulmonale at or above this P amplitude in lead II (mV).
    pub p_pulmonale_mv: f64,
}

impl Default for CriteriaThresholds {
    fn default() -> Self {
        Self {
            rad_axis_deg: 90.0,
            tall_r_v1_mv: 0.7,
            narrow_qrs_ms: 120.0,
            p_pulmonale_mv: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriteriaResult {
    pub right_axis_deviation: bool,
    pub tall_narrow_r_v1: bool,
    pub r_gt_s_v1: bool,
    pub rae_flag: bool,
    pub rvh_positive: bool,
    /// The axis could not be computed; `right_axis_deviation` was forced false.
    pub axis_undefined: bool,
}

impl CriteriaResult {
    /// Screen-positive: any RVH criterion or right atrial enlargement.
    pub fn any_positive(&self) -> bool {
        self.rvh_positive || self.rae_flag
    }
}

/// The raw measurements the rules look at, independent of how they were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaInputs {
    pub r_amp_v1: f64,
    pub s_amp_v1: f64,
    pub qrs_duration_ms: f64,
    pub axis_deg: Option<f64>,
    pub p_amp_ii: f64,
}

impl<T: Scalar> From<&FiducialSet<T>> for CriteriaInputs {
    fn from(f: &FiducialSet<T>) -> Self {
        Self {
            r_amp_v1: f.r_amp_v1.to_f64_lossless(),
            s_amp_v1: f.s_amp_v1.to_f64_lossless(),
            qrs_duration_ms: f.qrs_duration.to_f64_lossless(),
            axis_deg: f.frontal_axis.map(|a| a.to_f64_lossless()),
            p_amp_ii: f.p_amp_ii.to_f64_lossless(),
        }
    }
}

pub fn apply_thresholds(x: &CriteriaInputs, t: &CriteriaThresholds) -> CriteriaResult {
    let right_axis_deviation = x.axis_deg.is_some_and(|a| a > t.rad_axis_deg);
    let tall_narrow_r_v1 = x.r_amp_v1 >= t.tall_r_v1_mv && x.qrs_duration_ms < t.narrow_qrs_ms;
    let r_gt_s_v1 = x.r_amp_v1 > x.s_amp_v1;
    CriteriaResult {
        right_axis_deviation,
        tall_narrow_r_v1,
        r_gt_s_v1,
        rae_flag: x.p_amp_ii >= t.p_pulmonale_mv,
        rvh_positive: right_axis_deviation || tall_narrow_r_v1 || r_gt_s_v1,
        axis_undefined: x.axis_deg.is_none(),
    }
}

pub fn evaluate_criteria<T: Scalar>(f: &FiducialSet<T>, t: &CriteriaThresholds) -> CriteriaResult {
    apply_thresholds(&CriteriaInputs::from(f), t)
}
