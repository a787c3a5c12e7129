//! Generalized convolution for point clouds.
//!
//! A generalized convolution layer evaluates a small shared network `f` on the
//! relation between every query point and each of its K nearest neighbours
//! (coordinate offsets, Euclidean distance, neighbour features), sums the
//! results over the neighbourhood and applies a leaky ReLU. Stacking strided
//! layers and finishing with a single query at the origin that sees every
//! point yields a permutation-invariant classifier.
//!
//! The crate is organised bottom-up:
//!
//! - [`numeric`]: matrices, the filter MLP with reverse-mode gradients,
//!   softmax cross-entropy, Adam/SGD.
//! - [`spatial`]: exact KNN via a median-split KD-tree and a brute-force oracle.
//! - [`layer`]: point clouds, relation extraction, the convolution layer and
//!   the global head.
//! - [`data`]: toy squares/circles, OFF meshes, surface sampling, ModelNet10
//!   loading and the `PCLD` cache format.
//! - [`train`]: model assembly, the training loop, evaluation and `GCKP`
//!   checkpoints.
//! - [`viz`]: filter probing, PGM/PPM output and the scaling benchmark.

pub mod data;
pub mod error;
pub mod layer;
pub mod numeric;
pub mod real;
pub mod rng;
pub mod spatial;
pub mod train;
pub mod viz;

pub use error::{Error, Result};
pub use real::Real;
