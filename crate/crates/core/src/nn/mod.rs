//! Minimal differentiable-layer engine: exactly the layer set the network
//! needs, each with an analytic backward pass.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod kernels;
pub mod loss;
pub mod pool;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_scalar};
pub use batchnorm::{BatchNorm, BatchNormCache, BatchNormGrads, BN_EPSILON, BN_MOMENTUM};
pub use conv::{Conv1d, Conv1dGrads};
pub use dense::{Dense, DenseGrads};
pub use dropout::{dropout_backward, dropout_train, DropoutMask};
pub use loss::bce_with_logits;
pub use pool::{MaxPool1d, MaxPoolCache};
