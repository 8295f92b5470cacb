use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check<T>(y: &[T], y_hat: &[T]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::shape("metric inputs", y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    Ok(())
}

fn n_of<T: Scalar>(y: &[T]) -> T {
    T::from_usize(y.len()).unwrap()
}

pub fn mse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check(y, y_hat)?;
    let sse: T = y.iter().zip(y_hat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    Ok(sse / n_of(y))
}

pub fn rmse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    mse(y, y_hat).map(T::sqrt)
}

pub fn mae<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check(y, y_hat)?;
    let sae: T = y.iter().zip(y_hat).map(|(&a, &b)| (a - b).abs()).sum();
    Ok(sae / n_of(y))
}

/// Coefficient of determination. Errors when `y` has fewer than two values
/// or no variance.
pub fn r2<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<T> {
    check(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::Degenerate("r2 needs at least two samples"));
    }
    let mean = y.iter().copied().sum::<T>() / n_of(y);
    let ss_res: T = y.iter().zip(y_hat).map(|(&a, &b)| (a - b) * (a - b)).sum();
    let ss_tot: T = y.iter().map(|&a| (a - mean) * (a - mean)).sum();
    if ss_tot == T::zero() {
        return Err(Error::Degenerate("r2 undefined for constant observations"));
    }
    Ok(T::one() - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub label: String,
    pub n: usize,
    pub r2: f64,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
}

impl MetricsReport {
    pub fn compute<T: Scalar>(label: impl Into<String>, y: &[T], y_hat: &[T]) -> Result<Self> {
        let mse = mse(y, y_hat)?.as_f64();
        Ok(Self {
            label: label.into(),
            n: y.len(),
            r2: r2(y, y_hat)?.as_f64(),
            mse,
            rmse: mse.sqrt(),
            mae: mae(y, y_hat)?.as_f64(),
        })
    }
}
