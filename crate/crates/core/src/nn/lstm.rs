//! Single LSTM layer: gate equations, one-step cell update and full-sequence unroll.
//!
//! The four gate weight matrices are stored stacked in one `(4 * units, units + input_dim)`
//! matrix in the order forget, input, candidate, output. Each gate acts on the
//! concatenation `[h_prev, x_t]`, so the first `units` columns of a gate row
//! multiply the previous hidden state and the remaining columns the input.

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::scalar::Scalar;
use crate::tensor::{ensure_finite, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Forget = 0,
    Input = 1,
    Candidate = 2,
    Output = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Forget, Gate::Input, Gate::Candidate, Gate::Output];
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams<T> {
    pub units: usize,
    pub input_dim: usize,
    /// Stacked gate weights, `(4 * units, units + input_dim)`.
    pub weights: Matrix<T>,
    /// Stacked gate biases, `4 * units`.
    pub bias: Vec<T>,
}

/// Hidden and cell state carried between time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(units: usize) -> Self {
        Self { h: vec![T::zero(); units], c: vec![T::zero(); units] }
    }
}

/// Gate activations from one step, kept for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct GateValues<T> {
    pub forget: Vec<T>,
    pub input: Vec<T>,
    pub candidate: Vec<T>,
    pub output: Vec<T>,
}

impl<T: Scalar> LstmLayerParams<T> {
    pub fn new(units: usize, input_dim: usize, weights: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if units == 0 || input_dim == 0 {
            return Err(Error::Config("lstm units and input_dim must be positive".into()));
        }
        if weights.shape() != (4 * units, units + input_dim) {
            return Err(Error::shape(
                "lstm weights",
                format!("{:?}", (4 * units, units + input_dim)),
                format!("{:?}", weights.shape()),
            ));
        }
        if bias.len() != 4 * units {
            return Err(Error::shape("lstm bias", 4 * units, bias.len()));
        }
        Ok(Self { units, input_dim, weights, bias })
    }

    /// Build from the four per-gate matrices, each `(units, units + input_dim)`.
    pub fn from_gates(gate_weights: [&Matrix<T>; 4], gate_biases: [&[T]; 4]) -> Result<Self> {
        let (units, width) = gate_weights[0].shape();
        if width <= units {
            return Err(Error::Config("gate matrix must have more columns than rows".into()));
        }
        let mut data = Vec::with_capacity(4 * units * width);
        let mut bias = Vec::with_capacity(4 * units);
        for (w, b) in gate_weights.iter().zip(gate_biases) {
            if w.shape() != (units, width) {
                return Err(Error::shape("lstm gate weights", format!("{:?}", (units, width)), format!("{:?}", w.shape())));
            }
            data.extend_from_slice(w.as_slice());
            bias.extend_from_slice(b);
        }
        Self::new(units, width - units, Matrix::from_vec(4 * units, width, data)?, bias)
    }

    pub fn zeros(units: usize, input_dim: usize) -> Self {
        Self {
            units,
            input_dim,
            weights: Matrix::zeros(4 * units, units + input_dim),
            bias: vec![T::zero(); 4 * units],
        }
    }

    /// Rows of the stacked matrix belonging to `gate`, as a flat row-major slice.
    pub fn gate_weights(&self, gate: Gate) -> &[T] {
        let width = self.units + self.input_dim;
        let start = gate as usize * self.units * width;
        &self.weights.as_slice()[start..start + self.units * width]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[T] {
        let start = gate as usize * self.units;
        &self.bias[start..start + self.units]
    }

    pub fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.bias.len()
    }

    /// One time step; returns the new state together with the gate activations.
    pub fn step_with_gates(&self, state: &LstmState<T>, x: &[T]) -> Result<(LstmState<T>, GateValues<T>)> {
        if x.len() != self.input_dim {
            return Err(Error::shape("lstm step input", self.input_dim, x.len()));
        }
        if state.h.len() != self.units || state.c.len() != self.units {
            return Err(Error::shape("lstm state", self.units, state.h.len().max(state.c.len())));
        }
        ensure_finite(x, "lstm input")?;
        let mut concat = Vec::with_capacity(self.units + self.input_dim);
        concat.extend_from_slice(&state.h);
        concat.extend_from_slice(x);
        let z = self.weights.matvec(&concat)?;
        let u = self.units;
        let pre = |g: Gate, k: usize| z[g as usize * u + k] + self.bias[g as usize * u + k];

        let forget: Vec<T> = (0..u).map(|k| sigmoid(pre(Gate::Forget, k))).collect();
        let input: Vec<T> = (0..u).map(|k| sigmoid(pre(Gate::Input, k))).collect();
        let candidate: Vec<T> = (0..u).map(|k| pre(Gate::Candidate, k).tanh()).collect();
        let output: Vec<T> = (0..u).map(|k| sigmoid(pre(Gate::Output, k))).collect();

        let c: Vec<T> = (0..u).map(|k| forget[k] * state.c[k] + input[k] * candidate[k]).collect();
        let h: Vec<T> = (0..u).map(|k| output[k] * c[k].tanh()).collect();
        Ok((LstmState { h, c }, GateValues { forget, input, candidate, output }))
    }

    pub fn cell_step(&self, state: &LstmState<T>, x: &[T]) -> Result<LstmState<T>> {
        self.step_with_gates(state, x).map(|(s, _)| s)
    }

    /// Unroll over `seq` (`(T, input_dim)`) from a zero state, returning every hidden state.
    pub fn forward(&self, seq: &Matrix<T>) -> Result<Matrix<T>> {
        if seq.rows() == 0 {
            return Err(Error::Empty("lstm input sequence"));
        }
        if seq.cols() != self.input_dim {
            return Err(Error::shape("lstm sequence features", self.input_dim, seq.cols()));
        }
        let mut state = LstmState::zeros(self.units);
        let mut out = Vec::with_capacity(seq.rows() * self.units);
        for t in 0..seq.rows() {
            state = self.cell_step(&state, seq.row(t))?;
            out.extend_from_slice(&state.h);
        }
        Matrix::from_vec(seq.rows(), self.units, out)
    }
}
