use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::scalar::Scalar;
use crate::tensor::{ensure_finite, Matrix};

/// Fully connected layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams<T> {
    /// Shape `(out_dim, in_dim)`.
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> DenseLayerParams<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::shape("dense bias", weights.rows(), bias.len()));
        }
        Ok(Self { weights, bias, activation })
    }

    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(out_dim, in_dim),
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        ensure_finite(x, "dense input")?;
        let mut y = self.weights.matvec(x)?;
        for (v, &b) in y.iter_mut().zip(&self.bias) {
            *v = self.activation.eval(*v + b);
        }
        Ok(y)
    }

    pub fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }
}
