//! Hand-written differentiable layers, the assembled network, and the optimizer.

mod activation;
mod adam;
mod conv;
mod dense;
pub mod gradcheck;
mod lstm;
mod network;

pub use activation::{sigmoid, Activation};
pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_LR};
pub use conv::ConvLayerParams;
pub use dense::DenseLayerParams;
pub use gradcheck::{finite_difference, finite_difference_gradient, max_relative_error};
pub use lstm::{Gate, GateValues, LstmLayerParams, LstmState};
pub use network::{ForwardCache, NetworkConfig, NetworkParams};
pub(crate) use network::defaults;
