//! Distance-windowed neural network layers.
//!
//! A window matrix `F` built from the distance between a weight element and
//! the diagonal of its weight matrix masks dense kernels (and the channel
//! dimensions of convolution kernels). The crate provides:
//!
//! - [`tensor`]: dense row-major arrays plus matmul, im2col convolution and pooling
//! - [`window`]: window construction, threshold/width solvers, masking
//! - [`layers`] and [`network`]: forward/backward layers and layer stacks
//! - [`train`]: Adam/RMSprop, the training loop, evaluation, L1 penalty
//! - [`gradcheck`]: central-difference gradient checks
//! - [`stats`]: Wilcoxon rank-sum (Mann-Whitney U) test
//! - [`data`]: in-memory datasets and a synthetic blob generator
//!
//! Everything here is `no_std` + `alloc`. File formats and the CLI live in
//! the `szlab` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod network;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod tensor;
pub mod train;
pub mod window;

pub use data::{synthetic_blobs, synthetic_blobs_with, BlobsConfig, Dataset, Split};
pub use error::{Error, Result};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use network::{LayerSpec, Network, NetworkSpec, WindowOverride};
pub use scalar::{Precision, Scalar};
pub use stats::{mann_whitney_u, RankSumTest};
pub use tensor::{Padding, Tensor};
pub use train::{describe_window, evaluate, fit, Evaluation, MetricsRecord, Optimizer, Regime, TrainConfig};
pub use window::{WindowKind, WindowMatrix, WindowSpec};
