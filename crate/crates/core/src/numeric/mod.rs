//! Dense arithmetic and the filter network.

mod activation;
mod loss;
mod matrix;
mod mlp;
mod optim;

pub use activation::{leaky_relu, leaky_relu_grad, Activation, DEFAULT_LEAKY_SLOPE};
pub use loss::{argmax, softmax, softmax_cross_entropy};
pub use matrix::Matrix;
pub use mlp::{AffineLayer, BatchTrace, FilterNetwork, LayerGrads, NetworkGrads};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};

/// Anything holding learnable weights.
pub trait ParameterCount {
    /// Exact number of scalar weights and biases.
    fn parameter_count(&self) -> usize;
}

impl<P: ParameterCount> ParameterCount for [P] {
    fn parameter_count(&self) -> usize {
        self.iter().map(ParameterCount::parameter_count).sum()
    }
}
