use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Element-wise activation functions available to the layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// Identity map (slope 1).
    Linear,
    Sigmoid,
    Tanh,
}

impl Activation {
    /// Checked evaluation; rejects NaN and infinities.
    pub fn apply<T: Scalar>(self, x: T) -> Result<T> {
        if !x.is_finite() {
            return Err(Error::NonFinite("activation input"));
        }
        Ok(self.eval(x))
    }

    #[inline]
    pub fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Linear => x,
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output `y = eval(x)`.
    #[inline]
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Linear => T::one(),
            Activation::Sigmoid => y * (T::one() - y),
            Activation::Tanh => T::one() - y * y,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
            Activation::Sigmoid => 2,
            Activation::Tanh => 3,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        [Activation::Relu, Activation::Linear, Activation::Sigmoid, Activation::Tanh].get(code as usize).copied()
    }
}

/// Logistic function, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negative() {
        assert_eq!(Activation::Relu.apply(-2.5f64).unwrap(), 0.0);
        assert_eq!(Activation::Relu.apply(1.25f64).unwrap(), 1.25);
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(Activation::Sigmoid.apply(0.0f64).unwrap(), 0.5);
        assert_eq!(Activation::Sigmoid.apply(0.0f32).unwrap(), 0.5);
    }

    #[test]
    fn tanh_of_one() {
        // (e - 1/e) / (e + 1/e) evaluated to 20 digits: 0.76159415595576488812
        let y = Activation::Tanh.apply(1.0f64).unwrap();
        assert!((y - 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn linear_is_identity() {
        assert_eq!(Activation::Linear.apply(-3.5f64).unwrap(), -3.5);
    }

    #[test]
    fn non_finite_rejected() {
        for act in [Activation::Relu, Activation::Linear, Activation::Sigmoid, Activation::Tanh] {
            assert!(act.apply(f64::NAN).is_err());
            assert!(act.apply(f64::INFINITY).is_err());
        }
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(-800.0f64), 0.0);
        assert_eq!(sigmoid(800.0f64), 1.0);
        assert!(sigmoid(-30.0f64) > 0.0);
    }

    #[test]
    fn derivatives_match_central_differences() {
        let h = 1e-6;
        for act in [Activation::Linear, Activation::Sigmoid, Activation::Tanh, Activation::Relu] {
            for &x in &[-1.3f64, -0.2, 0.4, 2.0] {
                let fd = (act.eval(x + h) - act.eval(x - h)) / (2.0 * h);
                let an = act.derivative_from_output(act.eval(x));
                assert!((fd - an).abs() < 1e-8, "{act:?} at {x}");
            }
        }
    }
}
