use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Frontal-plane QRS axis in degrees, `(−180, 180]`, from net QRS of leads I and aVF.
pub fn frontal_axis<T: Scalar>(net_qrs_i: T, net_qrs_avf: T, floor: T) -> Result<T> {
    if net_qrs_i.hypot(net_qrs_avf) <= floor {
        return Err(Error::AxisUndefined);
    }
    let deg = net_qrs_avf.atan2(net_qrs_i).to_degrees();
    Ok(if deg <= T::lit(-180.0) { T::lit(180.0) } else { deg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn cardinal_directions() {
        assert_abs_diff_eq!(frontal_axis(1.0, 0.0, 1e-6).unwrap(), 0.0);
        assert_abs_diff_eq!(frontal_axis(0.0, 1.0, 1e-6).unwrap(), 90.0);
        assert_abs_diff_eq!(frontal_axis(-1.0, 0.0, 1e-6).unwrap(), 180.0);
        assert_abs_diff_eq!(frontal_axis(-1.0, -0.0, 1e-6).unwrap(), 180.0);
    }

    #[test]
    fn one_twenty_degrees() {
        // cos 120° = −0.5, sin 120° ≈ 0.866
        assert_abs_diff_eq!(frontal_axis(-0.5, 0.866, 1e-6).unwrap(), 120.0, epsilon = 0.01);
    }

    #[test]
    fn below_floor_is_undefined() {
        assert!(matches!(frontal_axis(0.1, 0.1, 1.0), Err(Error::AxisUndefined)));
    }

    proptest! {
        #[test]
        fn scale_invariant(i in -50.0f64..50.0, f in -50.0f64..50.0, k in 0.01f64..100.0) {
            prop_assume!(i.hypot(f) > 1e-3);
            let a = frontal_axis(i, f, 0.0).unwrap();
            let b = frontal_axis(k * i, k * f, 0.0).unwrap();
            prop_assert!((a - b).abs() < 1e-9 || (a - b).abs() > 359.999);
        }
    }
}
