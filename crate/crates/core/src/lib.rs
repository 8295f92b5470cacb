//! Storm-surge bias correction: learn the offset between modeled and observed
//! gauge water levels with a Conv1D + LSTM network and subtract the predicted
//! offsets from model output.
//!
//! Numerical code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the working precision for the common case.

pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
pub mod persist;
pub mod pipeline;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};

pub type Network = nn::NetworkParams<f64>;
pub type Network32 = nn::NetworkParams<f32>;
pub type Model = model::TrainedModel<f64>;
pub type Model32 = model::TrainedModel<f32>;
pub type Dataset = pipeline::WindowedDataset<f64>;
pub type Dataset32 = pipeline::WindowedDataset<f32>;
pub type Scaler = pipeline::ScalerParams<f64>;
pub type Adam = nn::AdamState<f64>;
