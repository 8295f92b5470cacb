use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{ensure_finite, Matrix};

/// Temporal 1-D convolution with ReLU, valid padding and stride 1.
///
/// Kernels are stored `(filters, in_channels, kernel_size)` row-major; the
/// layer computes a cross-correlation (no kernel flip).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayerParams<T> {
    pub filters: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub kernels: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvLayerParams<T> {
    pub fn new(filters: usize, in_channels: usize, kernel_size: usize, kernels: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if filters == 0 || in_channels == 0 || kernel_size == 0 {
            return Err(Error::Config("conv layer dimensions must be positive".into()));
        }
        if kernels.len() != filters * in_channels * kernel_size {
            return Err(Error::shape("conv kernels", filters * in_channels * kernel_size, kernels.len()));
        }
        if bias.len() != filters {
            return Err(Error::shape("conv bias", filters, bias.len()));
        }
        Ok(Self { filters, in_channels, kernel_size, kernels, bias })
    }

    pub fn zeros(filters: usize, in_channels: usize, kernel_size: usize) -> Self {
        Self {
            filters,
            in_channels,
            kernel_size,
            kernels: vec![T::zero(); filters * in_channels * kernel_size],
            bias: vec![T::zero(); filters],
        }
    }

    #[inline]
    pub fn kernel(&self, filter: usize, channel: usize, tap: usize) -> T {
        self.kernels[(filter * self.in_channels + channel) * self.kernel_size + tap]
    }

    pub fn output_len(&self, input_len: usize) -> Option<usize> {
        (input_len >= self.kernel_size).then(|| input_len - self.kernel_size + 1)
    }

    /// `input` is `(T, in_channels)`; the result is `(T - kernel_size + 1, filters)`.
    pub fn forward(&self, input: &Matrix<T>) -> Result<Matrix<T>> {
        if input.cols() != self.in_channels {
            return Err(Error::shape("conv input channels", self.in_channels, input.cols()));
        }
        let out_len = self.output_len(input.rows()).ok_or_else(|| {
            Error::shape("conv input length", format!(">= {}", self.kernel_size), input.rows())
        })?;
        ensure_finite(input.as_slice(), "conv input")?;
        let mut out = Matrix::zeros(out_len, self.filters);
        for t in 0..out_len {
            for j in 0..self.filters {
                let mut acc = self.bias[j];
                for i in 0..self.in_channels {
                    for k in 0..self.kernel_size {
                        acc += input.get(t + k, i) * self.kernel(j, i, k);
                    }
                }
                out.set(t, j, acc.max(T::zero()));
            }
        }
        Ok(out)
    }

    pub fn param_count(&self) -> usize {
        self.kernels.len() + self.bias.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> Matrix<f64> {
        Matrix::from_vec(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn box_filter_sums_windows() {
        let conv = ConvLayerParams::new(1, 1, 3, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
        let out = conv.forward(&column(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(out.as_slice(), &[6.0, 9.0]);
    }

    #[test]
    fn zero_kernel_gives_zeros() {
        let conv = ConvLayerParams::<f64>::zeros(4, 1, 3);
        let out = conv.forward(&column(&[5.0, -2.0, 7.0, 1.0, 0.5])).unwrap();
        assert_eq!(out.shape(), (3, 4));
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn negative_response_is_clamped() {
        let conv = ConvLayerParams::new(1, 1, 3, vec![1.0, 1.0, 1.0], vec![0.0]).unwrap();
        let out = conv.forward(&column(&[1.0, -10.0, 1.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0]);
    }

    #[test]
    fn too_short_input_is_error() {
        let conv = ConvLayerParams::<f64>::zeros(1, 1, 3);
        assert!(conv.forward(&column(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn output_length_law() {
        let conv = ConvLayerParams::<f64>::zeros(2, 1, 3);
        for len in 3..40 {
            let out = conv.forward(&column(&vec![0.5; len])).unwrap();
            assert_eq!(out.rows(), len - 3 + 1);
        }
    }

    #[test]
    fn channel_mismatch_is_error() {
        let conv = ConvLayerParams::<f64>::zeros(1, 2, 3);
        assert!(conv.forward(&column(&[1.0, 2.0, 3.0])).is_err());
    }
}
