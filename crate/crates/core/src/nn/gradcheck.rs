//! Central finite-difference gradients, used to verify backpropagation.

use crate::error::{Error, Result};
use crate::nn::{ForwardCache, NetworkParams};
use crate::scalar::Scalar;

/// `(f(θ + h e_k) - f(θ - h e_k)) / 2h` for every coordinate `k`.
pub fn finite_difference<T, F>(theta: &[T], h: T, mut f: F) -> Result<Vec<T>>
where
    T: Scalar,
    F: FnMut(&[T]) -> Result<T>,
{
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::Config("finite-difference step must be positive".into()));
    }
    let mut probe = theta.to_vec();
    let two_h = h + h;
    let mut grad = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let orig = probe[k];
        probe[k] = orig + h;
        let plus = f(&probe)?;
        probe[k] = orig - h;
        let minus = f(&probe)?;
        probe[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite-difference loss"));
        }
        grad.push((plus - minus) / two_h);
    }
    Ok(grad)
}

/// Finite-difference gradient of the batch MSE with respect to the flat
/// parameter vector of `network`. Costs two forward passes per parameter.
pub fn finite_difference_gradient<T: Scalar>(
    network: &NetworkParams<T>,
    inputs: &[T],
    targets: &[T],
    batch: usize,
    h: T,
) -> Result<Vec<T>> {
    let mut probe = network.clone();
    let mut cache = ForwardCache::new();
    finite_difference(&network.to_flat(), h, |theta| {
        probe.set_flat(theta)?;
        probe.loss(inputs, targets, batch, &mut cache)
    })
}

/// Largest `|a - b| / max(|a|, |b|, floor)` over paired entries.
pub fn max_relative_error<T: Scalar>(a: &[T], b: &[T], floor: T) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_derivative() {
        let g = finite_difference(&[3.0f64], 1e-5, |t| Ok(t[0] * t[0])).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn zero_step_is_error() {
        assert!(finite_difference(&[1.0f64], 0.0, |t| Ok(t[0])).is_err());
        assert!(finite_difference(&[1.0f64], -1e-3, |t| Ok(t[0])).is_err());
    }

    #[test]
    fn non_finite_loss_is_error() {
        assert!(finite_difference(&[1.0f64], 1e-3, |_| Ok(f64::NAN)).is_err());
    }
}
