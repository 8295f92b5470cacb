use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Min-max scaling fitted on training offsets only.
///
/// A degenerate fit (`max == min`) maps every value to zero and unscales to
/// `min`, so a constant training series never aborts a run. Values outside
/// the fitted range map outside `[0, 1]` without clamping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams<T> {
    pub min: T,
    pub max: T,
}

impl<T: Scalar> ScalerParams<T> {
    pub fn new(min: T, max: T) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || max < min {
            return Err(Error::Config(format!("invalid scaler range [{min}, {max}]")));
        }
        Ok(Self { min, max })
    }

    /// Fit over the finite values of `values`. NaN entries are rejected.
    pub fn fit(values: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut range: Option<(T, T)> = None;
        for v in values {
            if !v.is_finite() {
                return Err(Error::NonFinite("scaler training data"));
            }
            range = Some(match range {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
        let (min, max) = range.ok_or(Error::Empty("scaler training data"))?;
        Ok(Self { min, max })
    }

    pub fn is_degenerate(&self) -> bool {
        self.max == self.min
    }

    #[inline]
    pub fn scale(&self, x: T) -> T {
        if self.is_degenerate() {
            T::zero()
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn unscale(&self, y: T) -> T {
        if self.is_degenerate() {
            self.min
        } else {
            y * (self.max - self.min) + self.min
        }
    }

    pub fn cast<U: Scalar>(&self) -> ScalerParams<U> {
        ScalerParams { min: U::lit(self.min.as_f64()), max: U::lit(self.max.as_f64()) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fit_min_max() {
        let s = ScalerParams::fit([-2.0, 0.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max), (-2.0, 2.0));
        assert_eq!(s.scale(0.0), 0.5);
        assert_eq!(s.scale(-2.0), 0.0);
        assert_eq!(s.scale(2.0), 1.0);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = ScalerParams::fit([1.5f64, 1.5]).unwrap();
        assert!(s.is_degenerate());
        assert_eq!(s.scale(7.0), 0.0);
        assert_eq!(s.unscale(0.3), 1.5);
    }

    #[test]
    fn empty_and_nan_rejected() {
        assert!(ScalerParams::<f64>::fit([]).is_err());
        assert!(ScalerParams::fit([1.0, f64::NAN]).is_err());
    }

    #[test]
    fn out_of_range_not_clamped() {
        let s = ScalerParams::new(0.0, 1.0).unwrap();
        assert_eq!(s.scale(1.5), 1.5);
        assert_eq!(s.scale(-0.25), -0.25);
    }

    #[test]
    fn wider_test_range_changes_fit() {
        let train = [0.0, 1.0];
        let test = [3.0];
        let train_only = ScalerParams::fit(train).unwrap();
        let pooled = ScalerParams::fit(train.iter().chain(&test).copied()).unwrap();
        assert_ne!(train_only, pooled);
    }

    proptest! {
        #[test]
        fn round_trip(lo in -10.0f64..10.0, span in 1e-3f64..20.0, x in -20.0f64..20.0) {
            let s = ScalerParams::new(lo, lo + span).unwrap();
            prop_assert!((s.unscale(s.scale(x)) - x).abs() < 1e-12);
        }
    }
}
