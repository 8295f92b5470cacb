use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    /// Number of updates applied so far.
    pub t: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize, lr: T) -> Self {
        Self {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
            lr,
            beta1: T::lit(DEFAULT_BETA1),
            beta2: T::lit(DEFAULT_BETA2),
            eps: T::lit(DEFAULT_EPS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.len() != self.v.len() {
            return Err(Error::shape("adam moments", self.m.len(), self.v.len()));
        }
        let unit = |x: T| x > T::zero() && x < T::one();
        if !unit(self.beta1) || !unit(self.beta2) {
            return Err(Error::Config("adam betas must lie in (0, 1)".into()));
        }
        if !(self.eps > T::zero()) || !(self.lr >= T::zero()) {
            return Err(Error::Config("adam eps must be positive and lr non-negative".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One update over a flat parameter vector.
    pub fn update(&mut self, params: &mut [T], grad: &[T]) -> Result<()> {
        self.update_blocks(&mut [params], &[grad])
    }

    /// One update over parameter blocks that together form the flat vector,
    /// paired with gradient blocks of identical shapes.
    pub fn update_blocks(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        if total != self.m.len() || params.len() != grads.len() {
            return Err(Error::shape("adam parameters", self.m.len(), total));
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(Error::shape("adam gradient block", p.len(), g.len()));
            }
        }
        self.t += 1;
        let one = T::one();
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let bc1 = one - self.beta1.powi(t);
        let bc2 = one - self.beta2.powi(t);
        let mut k = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (theta, &gi) in p.iter_mut().zip(g.iter()) {
                let m = self.beta1 * self.m[k] + (one - self.beta1) * gi;
                let v = self.beta2 * self.v[k] + (one - self.beta2) * gi * gi;
                self.m[k] = m;
                self.v[k] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                *theta -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
        Ok(())
    }
}
