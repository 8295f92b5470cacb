use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamState, ForwardCache, NetworkConfig, NetworkParams, DEFAULT_LR};
use crate::pipeline::{ScalerParams, WindowedDataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    200
}
fn default_batch() -> usize {
    32
}
fn default_lr() -> f64 {
    DEFAULT_LR
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { epochs: default_epochs(), batch_size: default_batch(), lr: default_lr(), seed: 0 }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("learning rate {} must be finite and non-negative", self.lr)));
        }
        Ok(())
    }
}

/// A fitted network together with the scaler its inputs were built with.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    pub config: NetworkConfig,
    pub params: NetworkParams<T>,
    pub scaler: ScalerParams<T>,
    /// Mean training MSE (scaled units) per epoch.
    pub loss_curve: Vec<T>,
    pub optimizer: Option<AdamState<T>>,
}

/// Deterministic visiting order for one epoch.
pub fn epoch_permutation(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch as u64 + 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

pub fn train<T: Scalar>(dataset: &WindowedDataset<T>, net: NetworkConfig, cfg: &TrainingConfig) -> Result<TrainedModel<T>> {
    train_with_progress(dataset, net, cfg, |_, _| {})
}

/// Train from a seeded initialization, calling `progress(epoch, loss)` after every epoch.
pub fn train_with_progress<T: Scalar>(
    dataset: &WindowedDataset<T>,
    net: NetworkConfig,
    cfg: &TrainingConfig,
    progress: impl FnMut(usize, T),
) -> Result<TrainedModel<T>> {
    net.validate()?;
    if net.w_in != dataset.w_in || net.w_out != dataset.w_out {
        return Err(Error::Config(format!(
            "network windows ({}, {}) differ from dataset windows ({}, {})",
            net.w_in, net.w_out, dataset.w_in, dataset.w_out
        )));
    }
    let params = NetworkParams::build(net, cfg.seed)?;
    let optimizer = AdamState::new(params.param_count(), T::lit(cfg.lr));
    let model = TrainedModel { config: net, params, scaler: dataset.scaler, loss_curve: Vec::new(), optimizer: Some(optimizer) };
    continue_training(model, dataset, cfg, progress)
}

/// Run `cfg.epochs` more epochs, resuming the stored optimizer state if any.
/// Epoch numbering (and hence shuffling) continues from the existing loss curve.
pub fn continue_training<T: Scalar>(
    mut model: TrainedModel<T>,
    dataset: &WindowedDataset<T>,
    cfg: &TrainingConfig,
    mut progress: impl FnMut(usize, T),
) -> Result<TrainedModel<T>> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let net = model.config;
    let (w_in, w_out) = (net.w_in * net.in_channels, net.w_out);
    let n = dataset.len();
    let mut xs = Vec::with_capacity(n * w_in);
    let mut ys = Vec::with_capacity(n * w_out);
    for s in &dataset.samples {
        if s.input.len() != w_in || s.target.len() != w_out {
            return Err(Error::shape("training sample", format!("{w_in}+{w_out}"), format!("{}+{}", s.input.len(), s.target.len())));
        }
        xs.extend_from_slice(&s.input);
        ys.extend_from_slice(&s.target);
    }

    let mut adam = model.optimizer.take().unwrap_or_else(|| AdamState::new(model.params.param_count(), T::lit(cfg.lr)));
    adam.lr = T::lit(cfg.lr);
    adam.validate()?;
    let mut grads = NetworkParams::zeros(net)?;
    let mut cache = ForwardCache::new();
    let mut bx = Vec::with_capacity(cfg.batch_size * w_in);
    let mut by = Vec::with_capacity(cfg.batch_size * w_out);
    let first_epoch = model.loss_curve.len();

    for epoch in first_epoch..first_epoch + cfg.epochs {
        let order = epoch_permutation(n, cfg.seed, epoch);
        let mut weighted = T::zero();
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.extend_from_slice(&xs[i * w_in..(i + 1) * w_in]);
                ys_slice(&ys, i, w_out, &mut by);
            }
            model.params.forward_batch(&bx, chunk.len(), &mut cache)?;
            let loss = model.params.backward(&mut cache, &by, &mut grads).map_err(|e| match e {
                Error::NonFinite(_) => Error::Data(format!("non-finite training loss at epoch {epoch}, batch {b}")),
                other => other,
            })?;
            let grad_blocks = grads.slices();
            adam.update_blocks(&mut model.params.slices_mut(), &grad_blocks)?;
            weighted += loss * T::from_usize(chunk.len()).unwrap();
        }
        let epoch_loss = weighted / T::from_usize(n).unwrap();
        if !epoch_loss.is_finite() || !model.params.is_finite() {
            return Err(Error::Data(format!("training diverged at epoch {epoch}")));
        }
        model.loss_curve.push(epoch_loss);
        progress(epoch, epoch_loss);
    }
    model.optimizer = Some(adam);
    Ok(model)
}

#[inline]
fn ys_slice<T: Scalar>(ys: &[T], i: usize, w_out: usize, out: &mut Vec<T>) {
    out.extend_from_slice(&ys[i * w_out..(i + 1) * w_out]);
}

impl<T: Scalar> TrainedModel<T> {
    /// Predicted offset window (scaled units) for one scaled input window.
    pub fn predict_offsets(&self, input: &[T]) -> Result<Vec<T>> {
        let expected = self.config.w_in * self.config.in_channels;
        if input.len() != expected {
            return Err(Error::shape("prediction input window", expected, input.len()));
        }
        self.params.predict(input)
    }

    /// Batched prediction; `inputs` holds windows back to back.
    pub fn predict_many(&self, inputs: &[T]) -> Result<Vec<T>> {
        let per = self.config.w_in * self.config.in_channels;
        if inputs.len() % per != 0 {
            return Err(Error::shape("prediction inputs", format!("multiple of {per}"), inputs.len()));
        }
        let mut cache = ForwardCache::new();
        let mut out = Vec::with_capacity(inputs.len() / per * self.config.w_out);
        for chunk in inputs.chunks(per * 256) {
            out.extend_from_slice(self.params.forward_batch(chunk, chunk.len() / per, &mut cache)?);
        }
        Ok(out)
    }
}
