//! Layers with explicit forward/backward passes.
//!
//! Each layer has three entry points:
//! - `forward`: training pass, caches what `backward` needs
//! - `infer`: cache-free pass for evaluation, takes `&self`
//! - `backward`: consumes the cache, fills parameter gradients and
//!   optionally returns the input gradient

mod conv;
mod dense;
mod init;
mod loss;
mod simple;

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

pub use conv::Conv2d;
pub use dense::Dense;
pub use init::{glorot_uniform, he_init};
pub use loss::softmax_crossentropy;
pub use simple::{dropout_forward, Dropout, Flatten, MaxPool2x2, Relu};

use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::window::WindowMatrix;

/// A trainable tensor with its gradient and optimizer moment slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub value: Tensor<T>,
    pub grad: Vec<T>,
    pub(crate) first_moment: Vec<T>,
    pub(crate) second_moment: Vec<T>,
}

impl<T: Scalar> Param<T> {
    pub fn new(value: Tensor<T>) -> Self {
        let n = value.len();
        Self {
            value,
            grad: vec![T::zero(); n],
            first_moment: vec![T::zero(); n],
            second_moment: vec![T::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn first_moment(&self) -> &[T] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[T] {
        &self.second_moment
    }
}

/// A window attached to a layer plus its precomputed `f_ij · N / Σf` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWindow<T> {
    pub matrix: WindowMatrix,
    pub(crate) mask: Vec<T>,
}

impl<T: Scalar> LayerWindow<T> {
    pub fn new(matrix: WindowMatrix) -> Result<Self> {
        let mask = matrix.scaled_mask()?;
        Ok(Self { matrix, mask })
    }

    pub fn mask(&self) -> &[T] {
        &self.mask
    }
}

/// Multiplies `values` by `mask`, repeating the mask when `values` holds
/// several stacked copies of the masked matrix (conv kernel offsets).
pub(crate) fn masked_into<T: Scalar>(values: &[T], mask: &[T], out: &mut Vec<T>) {
    out.clear();
    out.resize(values.len(), T::zero());
    for (dst, src) in out.chunks_exact_mut(mask.len()).zip(values.chunks_exact(mask.len())) {
        for ((d, &v), &m) in dst.iter_mut().zip(src).zip(mask) {
            *d = v * m;
        }
    }
}

pub(crate) fn mask_in_place<T: Scalar>(values: &mut [T], mask: &[T]) {
    for chunk in values.chunks_exact_mut(mask.len()) {
        for (v, &m) in chunk.iter_mut().zip(mask) {
            *v *= m;
        }
    }
}

/// One layer of a [`crate::Network`].
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense(Dense<T>),
    Conv2d(Conv2d<T>),
    MaxPool2x2(MaxPool2x2),
    Dropout(Dropout<T>),
    Relu(Relu),
    Flatten(Flatten),
}

impl<T: Scalar> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::MaxPool2x2(_) => "maxpool2x2",
            Layer::Dropout(_) => "dropout",
            Layer::Relu(_) => "relu",
            Layer::Flatten(_) => "flatten",
        }
    }

    /// Training pass. Dropout draws from `rng`; with `None` it is the identity.
    pub fn forward(&mut self, x: Tensor<T>, rng: Option<&mut dyn RngCore>) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv2d(l) => l.forward(x),
            Layer::MaxPool2x2(l) => l.forward(x),
            Layer::Dropout(l) => l.forward(x, rng),
            Layer::Relu(l) => Ok(l.forward(x)),
            Layer::Flatten(l) => l.forward(x),
        }
    }

    /// Evaluation pass. `window_override` replaces the mask of a windowed layer.
    pub fn infer(&self, x: Tensor<T>, window_override: Option<&[T]>) -> Result<Tensor<T>> {
        match self {
            Layer::Dense(l) => l.infer(x, window_override),
            Layer::Conv2d(l) => l.infer(x, window_override),
            Layer::MaxPool2x2(l) => l.infer(x),
            Layer::Dropout(_) => Ok(x),
            Layer::Relu(_) => Ok(Relu::infer(x)),
            Layer::Flatten(l) => l.infer(x),
        }
    }

    pub fn backward(&mut self, grad: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        match self {
            Layer::Dense(l) => l.backward(grad, need_input_grad),
            Layer::Conv2d(l) => l.backward(grad, need_input_grad),
            Layer::MaxPool2x2(l) => l.backward(grad).map(Some),
            Layer::Dropout(l) => l.backward(grad).map(Some),
            Layer::Relu(l) => l.backward(grad).map(Some),
            Layer::Flatten(l) => l.backward(grad).map(Some),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        match self {
            Layer::Dense(l) => l.params(),
            Layer::Conv2d(l) => l.params(),
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Layer::Dense(l) => l.params_mut(),
            Layer::Conv2d(l) => l.params_mut(),
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Weight-matrix shape `(n_x, n_y)` the layer's window applies to, if the
    /// layer is a window target.
    pub fn window_shape(&self) -> Option<(usize, usize)> {
        match self {
            Layer::Dense(l) if l.is_window_target() => Some((l.n_in(), l.n_out())),
            Layer::Conv2d(l) if l.is_window_target() => Some((l.c_in(), l.c_out())),
            _ => None,
        }
    }

    pub fn window(&self) -> Option<&LayerWindow<T>> {
        match self {
            Layer::Dense(l) => l.window(),
            Layer::Conv2d(l) => l.window(),
            _ => None,
        }
    }
}
