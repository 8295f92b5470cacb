//! The offset-prediction network and its batched forward/backward passes.
//!
//! Layer stack: `Conv1D(ReLU) -> LSTM -> LSTM -> Dense(tanh) -> Flatten -> Dense(linear)`.
//! The convolution output is consumed by the first LSTM time-major, one step per
//! output position with `conv_filters` features per step. Both LSTMs return
//! their full hidden sequence. The tanh dense layer is applied independently at
//! every time step and the flatten step lays the result out as `t * dense_units + d`.
//!
//! Canonical parameter order (used for the flat gradient vector, Adam and the
//! weight file): conv kernels, conv bias, lstm1 weights, lstm1 bias, lstm2
//! weights, lstm2 bias, dense weights, dense bias, output weights, output bias.
//! Every block is row-major.
//!
//! Batched buffers use a `(sample, time, feature)` row-major layout so that the
//! rows for one time step across the batch form a strided matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::nn::{Activation, ConvLayerParams, DenseLayerParams, LstmLayerParams};
use crate::scalar::{Scalar, Strided, StridedMut};
use crate::tensor::{ensure_finite, Matrix};

/// Architecture of the network. Defaults are the full-size layer widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Input window length in hours.
    pub w_in: usize,
    /// Prediction window length in hours; also the output layer width.
    pub w_out: usize,
    #[serde(default = "one")]
    pub in_channels: usize,
    #[serde(default = "defaults::conv_filters")]
    pub conv_filters: usize,
    #[serde(default = "defaults::conv_kernel")]
    pub conv_kernel: usize,
    #[serde(default = "defaults::lstm1_units")]
    pub lstm1_units: usize,
    #[serde(default = "defaults::lstm2_units")]
    pub lstm2_units: usize,
    #[serde(default = "defaults::dense_units")]
    pub dense_units: usize,
}

fn one() -> usize {
    1
}

pub(crate) mod defaults {
    pub fn conv_filters() -> usize {
        32
    }
    pub fn conv_kernel() -> usize {
        3
    }
    pub fn lstm1_units() -> usize {
        128
    }
    pub fn lstm2_units() -> usize {
        256
    }
    pub fn dense_units() -> usize {
        128
    }
}

impl NetworkConfig {
    /// Full-size architecture: 32 filters of width 3, LSTM 128 and 256, dense 128.
    pub fn standard(w_in: usize, w_out: usize) -> Self {
        Self {
            w_in,
            w_out,
            in_channels: 1,
            conv_filters: defaults::conv_filters(),
            conv_kernel: defaults::conv_kernel(),
            lstm1_units: defaults::lstm1_units(),
            lstm2_units: defaults::lstm2_units(),
            dense_units: defaults::dense_units(),
        }
    }

    /// Same topology with custom layer widths.
    pub fn with_widths(mut self, filters: usize, lstm1: usize, lstm2: usize, dense: usize) -> Self {
        self.conv_filters = filters;
        self.lstm1_units = lstm1;
        self.lstm2_units = lstm2;
        self.dense_units = dense;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("w_out", self.w_out),
            ("in_channels", self.in_channels),
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("lstm1_units", self.lstm1_units),
            ("lstm2_units", self.lstm2_units),
            ("dense_units", self.dense_units),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.w_in < self.conv_kernel {
            return Err(Error::Config(format!(
                "w_in ({}) must be at least the conv kernel size ({})",
                self.w_in, self.conv_kernel
            )));
        }
        Ok(())
    }

    /// Number of time steps after the convolution.
    pub fn conv_len(&self) -> usize {
        self.w_in + 1 - self.conv_kernel
    }

    pub fn flatten_width(&self) -> usize {
        self.conv_len() * self.dense_units
    }

    /// Declared `(input shape, output shape)` of every layer, as `(time, features)`.
    pub fn layer_shapes(&self) -> Vec<(&'static str, (usize, usize), (usize, usize))> {
        let l = self.conv_len();
        vec![
            ("conv1d", (self.w_in, self.in_channels), (l, self.conv_filters)),
            ("lstm1", (l, self.conv_filters), (l, self.lstm1_units)),
            ("lstm2", (l, self.lstm1_units), (l, self.lstm2_units)),
            ("dense", (l, self.lstm2_units), (l, self.dense_units)),
            ("flatten", (l, self.dense_units), (1, self.flatten_width())),
            ("output", (1, self.flatten_width()), (1, self.w_out)),
        ]
    }

    pub fn param_count(&self) -> usize {
        let (c, f, k) = (self.in_channels, self.conv_filters, self.conv_kernel);
        let (u1, u2, d) = (self.lstm1_units, self.lstm2_units, self.dense_units);
        (f * c * k + f)
            + (4 * u1 * (u1 + f) + 4 * u1)
            + (4 * u2 * (u2 + u1) + 4 * u2)
            + (d * u2 + d)
            + (self.w_out * self.flatten_width() + self.w_out)
    }
}

/// All trainable parameters of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams<T> {
    pub config: NetworkConfig,
    pub conv: ConvLayerParams<T>,
    pub lstm1: LstmLayerParams<T>,
    pub lstm2: LstmLayerParams<T>,
    pub dense: DenseLayerParams<T>,
    pub output: DenseLayerParams<T>,
}

fn glorot<T: Scalar>(rng: &mut ChaCha8Rng, values: &mut [T], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    for v in values {
        *v = T::lit(rng.random_range(-limit..limit));
    }
}

impl<T: Scalar> NetworkParams<T> {
    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let NetworkConfig { in_channels, conv_filters, conv_kernel, lstm1_units, lstm2_units, dense_units, w_out, .. } =
            config;
        Ok(Self {
            config,
            conv: ConvLayerParams::zeros(conv_filters, in_channels, conv_kernel),
            lstm1: LstmLayerParams::zeros(lstm1_units, conv_filters),
            lstm2: LstmLayerParams::zeros(lstm2_units, lstm1_units),
            dense: DenseLayerParams::zeros(lstm2_units, dense_units, Activation::Tanh),
            output: DenseLayerParams::zeros(config.flatten_width(), w_out, Activation::Linear),
        })
    }

    /// Seeded Glorot-uniform initialization. Biases start at zero except the
    /// LSTM forget gates, which start at one.
    pub fn build(config: NetworkConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = &config;
        glorot(&mut rng, &mut p.conv.kernels, c.in_channels * c.conv_kernel, c.conv_filters * c.conv_kernel);
        glorot(&mut rng, p.lstm1.weights.as_mut_slice(), c.lstm1_units + c.conv_filters, c.lstm1_units);
        glorot(&mut rng, p.lstm2.weights.as_mut_slice(), c.lstm2_units + c.lstm1_units, c.lstm2_units);
        glorot(&mut rng, p.dense.weights.as_mut_slice(), c.lstm2_units, c.dense_units);
        glorot(&mut rng, p.output.weights.as_mut_slice(), c.flatten_width(), c.w_out);
        p.lstm1.bias[..c.lstm1_units].fill(T::one());
        p.lstm2.bias[..c.lstm2_units].fill(T::one());
        Ok(p)
    }

    pub fn param_count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter blocks in canonical order.
    pub fn slices(&self) -> [&[T]; 10] {
        [
            &self.conv.kernels,
            &self.conv.bias,
            self.lstm1.weights.as_slice(),
            &self.lstm1.bias,
            self.lstm2.weights.as_slice(),
            &self.lstm2.bias,
            self.dense.weights.as_slice(),
            &self.dense.bias,
            self.output.weights.as_slice(),
            &self.output.bias,
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [T]; 10] {
        [
            &mut self.conv.kernels,
            &mut self.conv.bias,
            self.lstm1.weights.as_mut_slice(),
            &mut self.lstm1.bias,
            self.lstm2.weights.as_mut_slice(),
            &mut self.lstm2.bias,
            self.dense.weights.as_mut_slice(),
            &mut self.dense.bias,
            self.output.weights.as_mut_slice(),
            &mut self.output.bias,
        ]
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.slices().concat()
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        let total = self.param_count();
        if flat.len() != total {
            return Err(Error::shape("flat parameter vector", total, flat.len()));
        }
        let mut offset = 0;
        for block in self.slices_mut() {
            let n = block.len();
            block.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn from_flat(config: NetworkConfig, flat: &[T]) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        p.set_flat(flat)?;
        Ok(p)
    }

    pub fn fill_zero(&mut self) {
        for block in self.slices_mut() {
            block.fill(T::zero());
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// Reference forward pass for one sample built from the per-layer
    /// operations. Independent of the batched path used for training.
    pub fn forward_reference(&self, input: &[T]) -> Result<Vec<T>> {
        let c = &self.config;
        if input.len() != c.w_in * c.in_channels {
            return Err(Error::shape("network input", c.w_in * c.in_channels, input.len()));
        }
        let x = Matrix::from_vec(c.w_in, c.in_channels, input.to_vec())?;
        let a = self.conv.forward(&x)?;
        let h1 = self.lstm1.forward(&a)?;
        let h2 = self.lstm2.forward(&h1)?;
        let mut flat = Vec::with_capacity(c.flatten_width());
        for t in 0..h2.rows() {
            flat.extend(self.dense.forward(h2.row(t))?);
        }
        self.output.forward(&flat)
    }

    /// Forward pass for one sample via the batched kernels.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        let mut cache = ForwardCache::new();
        Ok(self.forward_batch(input, 1, &mut cache)?.to_vec())
    }

    /// Forward pass over `batch` samples stored back to back in `inputs`
    /// (`batch * w_in * in_channels` values). Intermediates are kept in `cache`.
    pub fn forward_batch<'c>(&self, inputs: &[T], batch: usize, cache: &'c mut ForwardCache<T>) -> Result<&'c [T]> {
        let c = self.config;
        let per = c.w_in * c.in_channels;
        if batch == 0 {
            return Err(Error::Empty("forward batch"));
        }
        if inputs.len() != batch * per {
            return Err(Error::shape("network input batch", batch * per, inputs.len()));
        }
        ensure_finite(inputs, "network input")?;
        cache.valid_batch = None;
        let l = c.conv_len();
        let rows = batch * l;
        let (ch, k, f) = (c.in_channels, c.conv_kernel, c.conv_filters);

        // conv via im2col: cols[(b, t), i * k + tap] = x[b, t + tap, i]
        resize(&mut cache.cols, rows * ch * k);
        for b in 0..batch {
            for t in 0..l {
                let row = (b * l + t) * ch * k;
                for i in 0..ch {
                    for tap in 0..k {
                        cache.cols[row + i * k + tap] = inputs[b * per + (t + tap) * ch + i];
                    }
                }
            }
        }
        resize(&mut cache.conv_out, rows * f);
        T::gemm(
            T::one(),
            Strided::row_major(&cache.cols, 0, rows, ch * k, ch * k),
            Strided::transposed(&self.conv.kernels, 0, ch * k, f, ch * k),
            T::zero(),
            StridedMut::row_major(&mut cache.conv_out, 0, rows, f, f),
        );
        for row in cache.conv_out.chunks_exact_mut(f) {
            for (v, &b) in row.iter_mut().zip(&self.conv.bias) {
                *v = (*v + b).max(T::zero());
            }
        }

        cache.lstm1.forward(&self.lstm1, &cache.conv_out, batch, l);
        cache.lstm2.forward(&self.lstm2, &cache.lstm1.h, batch, l);

        let (u2, d, o) = (c.lstm2_units, c.dense_units, c.w_out);
        resize(&mut cache.dense_out, rows * d);
        T::gemm(
            T::one(),
            Strided::row_major(&cache.lstm2.h, 0, rows, u2, u2),
            Strided::transposed(self.dense.weights.as_slice(), 0, u2, d, u2),
            T::zero(),
            StridedMut::row_major(&mut cache.dense_out, 0, rows, d, d),
        );
        let dense_act = self.dense.activation;
        for row in cache.dense_out.chunks_exact_mut(d) {
            for (v, &b) in row.iter_mut().zip(&self.dense.bias) {
                *v = dense_act.eval(*v + b);
            }
        }

        let fw = c.flatten_width();
        resize(&mut cache.output, batch * o);
        T::gemm(
            T::one(),
            Strided::row_major(&cache.dense_out, 0, batch, fw, fw),
            Strided::transposed(self.output.weights.as_slice(), 0, fw, o, fw),
            T::zero(),
            StridedMut::row_major(&mut cache.output, 0, batch, o, o),
        );
        let out_act = self.output.activation;
        for row in cache.output.chunks_exact_mut(o) {
            for (v, &b) in row.iter_mut().zip(&self.output.bias) {
                *v = out_act.eval(*v + b);
            }
        }
        ensure_finite(&cache.output, "network output")?;
        cache.valid_batch = Some((batch, c));
        Ok(&cache.output)
    }

    /// Mean squared error of `forward_batch` against `targets` (`batch * w_out`).
    pub fn loss(&self, inputs: &[T], targets: &[T], batch: usize, cache: &mut ForwardCache<T>) -> Result<T> {
        let out = self.forward_batch(inputs, batch, cache)?;
        mse_loss(out, targets)
    }

    /// Backpropagation through the cached forward pass. Overwrites `grads`
    /// with the gradient of the mean squared error and returns the loss.
    pub fn backward(&self, cache: &mut ForwardCache<T>, targets: &[T], grads: &mut NetworkParams<T>) -> Result<T> {
        let c = self.config;
        let batch = match cache.valid_batch {
            Some((b, cfg)) if cfg == c => b,
            Some(_) => return Err(Error::Config("forward cache belongs to a different network".into())),
            None => return Err(Error::Empty("forward cache (run forward_batch first)")),
        };
        if grads.config != c {
            return Err(Error::Config("gradient buffer has a different configuration".into()));
        }
        let (o, d, u2, u1, f) = (c.w_out, c.dense_units, c.lstm2_units, c.lstm1_units, c.conv_filters);
        let (ch, k) = (c.in_channels, c.conv_kernel);
        let l = c.conv_len();
        let rows = batch * l;
        let fw = c.flatten_width();
        if targets.len() != batch * o {
            return Err(Error::shape("network targets", batch * o, targets.len()));
        }
        let loss = mse_loss(&cache.output, targets)?;

        // output layer
        let scale = T::lit(2.0) / T::from_usize(batch * o).unwrap();
        let out_act = self.output.activation;
        resize(&mut cache.d_out, batch * o);
        for i in 0..batch * o {
            let y = cache.output[i];
            cache.d_out[i] = scale * (y - targets[i]) * out_act.derivative_from_output(y);
        }
        T::gemm(
            T::one(),
            Strided::transposed(&cache.d_out, 0, o, batch, o),
            Strided::row_major(&cache.dense_out, 0, batch, fw, fw),
            T::zero(),
            StridedMut::row_major(grads.output.weights.as_mut_slice(), 0, o, fw, fw),
        );
        column_sums(&cache.d_out, o, &mut grads.output.bias);
        resize(&mut cache.d_dense, rows * d);
        T::gemm(
            T::one(),
            Strided::row_major(&cache.d_out, 0, batch, o, o),
            Strided::row_major(self.output.weights.as_slice(), 0, o, fw, fw),
            T::zero(),
            StridedMut::row_major(&mut cache.d_dense, 0, batch, fw, fw),
        );

        // time-distributed dense
        let dense_act = self.dense.activation;
        for (g, &y) in cache.d_dense.iter_mut().zip(&cache.dense_out) {
            *g *= dense_act.derivative_from_output(y);
        }
        T::gemm(
            T::one(),
            Strided::transposed(&cache.d_dense, 0, d, rows, d),
            Strided::row_major(&cache.lstm2.h, 0, rows, u2, u2),
            T::zero(),
            StridedMut::row_major(grads.dense.weights.as_mut_slice(), 0, d, u2, u2),
        );
        column_sums(&cache.d_dense, d, &mut grads.dense.bias);
        resize(&mut cache.d_h2, rows * u2);
        T::gemm(
            T::one(),
            Strided::row_major(&cache.d_dense, 0, rows, d, d),
            Strided::row_major(self.dense.weights.as_slice(), 0, d, u2, u2),
            T::zero(),
            StridedMut::row_major(&mut cache.d_h2, 0, rows, u2, u2),
        );

        // recurrent layers
        let mut d_h1 = std::mem::take(&mut cache.d_h1);
        resize(&mut d_h1, rows * u1);
        cache.lstm2.backward(&self.lstm2, &cache.lstm1.h, &cache.d_h2, batch, l, &mut grads.lstm2, Some(&mut d_h1));
        let mut d_conv = std::mem::take(&mut cache.d_conv);
        resize(&mut d_conv, rows * f);
        cache.lstm1.backward(&self.lstm1, &cache.conv_out, &d_h1, batch, l, &mut grads.lstm1, Some(&mut d_conv));

        // convolution (input gradient not needed)
        for (g, &y) in d_conv.iter_mut().zip(&cache.conv_out) {
            if y <= T::zero() {
                *g = T::zero();
            }
        }
        T::gemm(
            T::one(),
            Strided::transposed(&d_conv, 0, f, rows, f),
            Strided::row_major(&cache.cols, 0, rows, ch * k, ch * k),
            T::zero(),
            StridedMut::row_major(&mut grads.conv.kernels, 0, f, ch * k, ch * k),
        );
        column_sums(&d_conv, f, &mut grads.conv.bias);
        cache.d_h1 = d_h1;
        cache.d_conv = d_conv;
        Ok(loss)
    }

    /// Loss and gradient for one batch, allocating a fresh cache.
    pub fn loss_and_gradient(&self, inputs: &[T], targets: &[T], batch: usize) -> Result<(T, NetworkParams<T>)> {
        let mut cache = ForwardCache::new();
        let mut grads = NetworkParams::zeros(self.config)?;
        self.forward_batch(inputs, batch, &mut cache)?;
        let loss = self.backward(&mut cache, targets, &mut grads)?;
        Ok((loss, grads))
    }
}

fn mse_loss<T: Scalar>(out: &[T], targets: &[T]) -> Result<T> {
    if out.len() != targets.len() {
        return Err(Error::shape("loss targets", out.len(), targets.len()));
    }
    let sum: T = out.iter().zip(targets).map(|(&y, &t)| (y - t) * (y - t)).sum();
    let loss = sum / T::from_usize(out.len()).unwrap();
    if !loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(loss)
}

fn resize<T: Scalar>(buf: &mut Vec<T>, n: usize) {
    buf.resize(n, T::zero());
}

fn column_sums<T: Scalar>(data: &[T], cols: usize, out: &mut [T]) {
    out.fill(T::zero());
    for row in data.chunks_exact(cols) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

/// Intermediates of one LSTM layer over a batch.
#[derive(Debug, Default, Clone)]
pub(crate) struct LstmCache<T> {
    /// Post-activation gates `(b, t, 4u)` in order f, i, g, o.
    gates: Vec<T>,
    cell: Vec<T>,
    cell_tanh: Vec<T>,
    h: Vec<T>,
    d_gates: Vec<T>,
    h_prev: Vec<T>,
    dh_next: Vec<T>,
    dc_next: Vec<T>,
}

impl<T: Scalar> LstmCache<T> {
    fn forward(&mut self, p: &LstmLayerParams<T>, x: &[T], batch: usize, l: usize) {
        let (u, n_in) = (p.units, p.input_dim);
        let width = u + n_in;
        let rows = batch * l;
        resize(&mut self.gates, rows * 4 * u);
        resize(&mut self.cell, rows * u);
        resize(&mut self.cell_tanh, rows * u);
        resize(&mut self.h, rows * u);
        let w = p.weights.as_slice();

        // input contribution for every step at once
        T::gemm(
            T::one(),
            Strided::row_major(x, 0, rows, n_in, n_in),
            Strided::transposed(w, u, n_in, 4 * u, width),
            T::zero(),
            StridedMut::row_major(&mut self.gates, 0, rows, 4 * u, 4 * u),
        );
        for t in 0..l {
            if t > 0 {
                T::gemm(
                    T::one(),
                    Strided { data: &self.h, offset: (t - 1) * u, rows: batch, cols: u, row_stride: l * u, col_stride: 1 },
                    Strided::transposed(w, 0, u, 4 * u, width),
                    T::one(),
                    StridedMut { data: &mut self.gates, offset: t * 4 * u, rows: batch, cols: 4 * u, row_stride: l * 4 * u, col_stride: 1 },
                );
            }
            for b in 0..batch {
                let r = b * l + t;
                let g = &mut self.gates[r * 4 * u..(r + 1) * 4 * u];
                for (z, &bias) in g.iter_mut().zip(&p.bias) {
                    *z += bias;
                }
                for j in 0..u {
                    g[j] = sigmoid(g[j]);
                    g[u + j] = sigmoid(g[u + j]);
                    g[2 * u + j] = g[2 * u + j].tanh();
                    g[3 * u + j] = sigmoid(g[3 * u + j]);
                }
                for j in 0..u {
                    let c_prev = if t > 0 { self.cell[(r - 1) * u + j] } else { T::zero() };
                    let c = g[j] * c_prev + g[u + j] * g[2 * u + j];
                    let ct = c.tanh();
                    self.cell[r * u + j] = c;
                    self.cell_tanh[r * u + j] = ct;
                    self.h[r * u + j] = g[3 * u + j] * ct;
                }
            }
        }
    }

    /// BPTT given `d_h`, the loss gradient w.r.t. every hidden output.
    /// Writes parameter gradients into `grads` and, if requested, the input gradient.
    #[allow(clippy::too_many_arguments)]
    fn backward(
        &mut self,
        p: &LstmLayerParams<T>,
        x: &[T],
        d_h: &[T],
        batch: usize,
        l: usize,
        grads: &mut LstmLayerParams<T>,
        d_x: Option<&mut Vec<T>>,
    ) {
        let (u, n_in) = (p.units, p.input_dim);
        let width = u + n_in;
        let rows = batch * l;
        let w = p.weights.as_slice();
        resize(&mut self.d_gates, rows * 4 * u);
        resize(&mut self.dh_next, batch * u);
        resize(&mut self.dc_next, batch * u);
        self.dh_next.fill(T::zero());
        self.dc_next.fill(T::zero());
        let one = T::one();

        for t in (0..l).rev() {
            for b in 0..batch {
                let r = b * l + t;
                let g = &self.gates[r * 4 * u..(r + 1) * 4 * u];
                let dz = &mut self.d_gates[r * 4 * u..(r + 1) * 4 * u];
                for j in 0..u {
                    let (fg, ig, cg, og) = (g[j], g[u + j], g[2 * u + j], g[3 * u + j]);
                    let ct = self.cell_tanh[r * u + j];
                    let dh = d_h[r * u + j] + self.dh_next[b * u + j];
                    let d_o = dh * ct;
                    let dc = self.dc_next[b * u + j] + dh * og * (one - ct * ct);
                    let c_prev = if t > 0 { self.cell[(r - 1) * u + j] } else { T::zero() };
                    dz[j] = dc * c_prev * fg * (one - fg);
                    dz[u + j] = dc * cg * ig * (one - ig);
                    dz[2 * u + j] = dc * ig * (one - cg * cg);
                    dz[3 * u + j] = d_o * og * (one - og);
                    self.dc_next[b * u + j] = dc * fg;
                }
            }
            if t > 0 {
                T::gemm(
                    one,
                    Strided { data: &self.d_gates, offset: t * 4 * u, rows: batch, cols: 4 * u, row_stride: l * 4 * u, col_stride: 1 },
                    Strided::row_major(w, 0, 4 * u, u, width),
                    T::zero(),
                    StridedMut::row_major(&mut self.dh_next, 0, batch, u, u),
                );
            }
        }

        // h_{t-1} for every row, zero at t = 0
        resize(&mut self.h_prev, rows * u);
        for b in 0..batch {
            let start = b * l * u;
            self.h_prev[start..start + u].fill(T::zero());
            self.h_prev[start + u..start + l * u].copy_from_slice(&self.h[start..start + (l - 1) * u]);
        }
        let gw = grads.weights.as_mut_slice();
        T::gemm(
            one,
            Strided::transposed(&self.d_gates, 0, 4 * u, rows, 4 * u),
            Strided::row_major(&self.h_prev, 0, rows, u, u),
            T::zero(),
            StridedMut::row_major(gw, 0, 4 * u, u, width),
        );
        T::gemm(
            one,
            Strided::transposed(&self.d_gates, 0, 4 * u, rows, 4 * u),
            Strided::row_major(x, 0, rows, n_in, n_in),
            T::zero(),
            StridedMut::row_major(gw, u, 4 * u, n_in, width),
        );
        column_sums(&self.d_gates, 4 * u, &mut grads.bias);
        if let Some(d_x) = d_x {
            T::gemm(
                one,
                Strided::row_major(&self.d_gates, 0, rows, 4 * u, 4 * u),
                Strided::row_major(w, u, 4 * u, n_in, width),
                T::zero(),
                StridedMut::row_major(d_x, 0, rows, n_in, n_in),
            );
        }
    }
}

/// Reusable buffers for batched forward and backward passes.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    valid_batch: Option<(usize, NetworkConfig)>,
    cols: Vec<T>,
    conv_out: Vec<T>,
    lstm1: LstmCache<T>,
    lstm2: LstmCache<T>,
    dense_out: Vec<T>,
    output: Vec<T>,
    d_out: Vec<T>,
    d_dense: Vec<T>,
    d_h2: Vec<T>,
    d_h1: Vec<T>,
    d_conv: Vec<T>,
}

impl<T: Scalar> Default for ForwardCache<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> ForwardCache<T> {
    pub fn new() -> Self {
        Self {
            valid_batch: None,
            cols: Vec::new(),
            conv_out: Vec::new(),
            lstm1: LstmCache::default(),
            lstm2: LstmCache::default(),
            dense_out: Vec::new(),
            output: Vec::new(),
            d_out: Vec::new(),
            d_dense: Vec::new(),
            d_h2: Vec::new(),
            d_h1: Vec::new(),
            d_conv: Vec::new(),
        }
    }

    /// Drop cached intermediates so that `backward` refuses to run.
    pub fn invalidate(&mut self) {
        self.valid_batch = None;
    }
}
