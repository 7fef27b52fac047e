use alloc::vec;
use alloc::vec::Vec;

use super::{mask_in_place, masked_into, LayerWindow, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemm, Tensor};
use crate::window::WindowMatrix;

/// Fully connected layer `y = x · W + b` with `W: n_in × n_out`.
///
/// With a window attached the layer computes `y = x · (W ⊙ F · N/Σf) + b`.
/// `train_masked` decides whether the window is active during training
/// (developmental) or only at evaluation (disorganized).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    weight: Param<T>,
    bias: Option<Param<T>>,
    window: Option<LayerWindow<T>>,
    train_masked: bool,
    l1_lambda: Option<f64>,
    cache: Option<Tensor<T>>,
    effective: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn from_parts(weight: Tensor<T>, bias: Option<Tensor<T>>) -> Result<Self> {
        let &[_, n_out] = weight.shape() else {
            return Err(Error::InvalidShape(weight.shape().to_vec()));
        };
        if let Some(b) = &bias {
            if b.shape() != [n_out] {
                return Err(Error::ShapeMismatch {
                    expected: vec![n_out],
                    got: b.shape().to_vec(),
                });
            }
        }
        Ok(Self {
            weight: Param::new(weight),
            bias: bias.map(Param::new),
            window: None,
            train_masked: false,
            l1_lambda: None,
            cache: None,
            effective: Vec::new(),
        })
    }

    /// Attaches a window. When `train_masked` is set, weights under `f_ij = 0`
    /// are zeroed so they stay exactly zero through training.
    pub fn with_window(mut self, window: WindowMatrix, train_masked: bool) -> Result<Self> {
        if (window.n_x(), window.n_y()) != (self.n_in(), self.n_out()) {
            return Err(Error::ShapeMismatch {
                expected: vec![self.n_in(), self.n_out()],
                got: vec![window.n_x(), window.n_y()],
            });
        }
        if train_masked {
            for (w, &f) in self.weight.value.data_mut().iter_mut().zip(window.values()) {
                if f == 0.0 {
                    *w = T::zero();
                }
            }
        }
        self.window = Some(LayerWindow::new(window)?);
        self.train_masked = train_masked;
        Ok(self)
    }

    pub fn with_l1(mut self, lambda: f64) -> Self {
        self.l1_lambda = Some(lambda);
        self
    }

    pub fn n_in(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn n_out(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn weight(&self) -> &Param<T> {
        &self.weight
    }

    pub fn bias(&self) -> Option<&Param<T>> {
        self.bias.as_ref()
    }

    pub fn window(&self) -> Option<&LayerWindow<T>> {
        self.window.as_ref()
    }

    pub fn is_window_target(&self) -> bool {
        self.window.is_some()
    }

    pub fn train_masked(&self) -> bool {
        self.train_masked
    }

    pub fn l1_lambda(&self) -> Option<f64> {
        self.l1_lambda
    }

    pub(crate) fn weight_mut(&mut self) -> &mut Param<T> {
        &mut self.weight
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        core::iter::once(&self.weight).chain(self.bias.as_ref()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        core::iter::once(&mut self.weight).chain(self.bias.as_mut()).collect()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        match x.shape() {
            &[batch, n] if n == self.n_in() => Ok(batch),
            s => Err(Error::ShapeMismatch {
                expected: vec![s.first().copied().unwrap_or(0), self.n_in()],
                got: s.to_vec(),
            }),
        }
    }

    fn affine(&self, x: &Tensor<T>, batch: usize, weights: &[T]) -> Tensor<T> {
        let n_out = self.n_out();
        let mut out = Tensor::zeros(&[batch, n_out]);
        if let Some(b) = &self.bias {
            for row in out.data_mut().chunks_exact_mut(n_out) {
                row.copy_from_slice(b.value.data());
            }
        }
        gemm(
            false,
            false,
            batch,
            self.n_in(),
            n_out,
            x.data(),
            weights,
            out.data_mut(),
            self.bias.is_some(),
        );
        out
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        let batch = self.check_input(&x)?;
        let out = match (&self.window, self.train_masked) {
            (Some(w), true) => {
                let mut eff = core::mem::take(&mut self.effective);
                masked_into(self.weight.value.data(), &w.mask, &mut eff);
                let out = self.affine(&x, batch, &eff);
                self.effective = eff;
                out
            }
            _ => self.affine(&x, batch, self.weight.value.data()),
        };
        self.cache = Some(x);
        Ok(out)
    }

    /// Evaluation pass. The layer's own window applies unless
    /// `window_override` supplies different `f_ij · N/Σf` factors.
    pub fn infer(&self, x: Tensor<T>, window_override: Option<&[T]>) -> Result<Tensor<T>> {
        let batch = self.check_input(&x)?;
        let mask = window_override.or(self.window.as_ref().map(|w| w.mask.as_slice()));
        match mask {
            Some(mask) => {
                if mask.len() != self.weight.len() {
                    return Err(Error::ShapeMismatch {
                        expected: vec![self.weight.len()],
                        got: vec![mask.len()],
                    });
                }
                let mut eff = Vec::new();
                masked_into(self.weight.value.data(), mask, &mut eff);
                Ok(self.affine(&x, batch, &eff))
            }
            None => Ok(self.affine(&x, batch, self.weight.value.data())),
        }
    }

    pub fn backward(&mut self, grad: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let x = self.cache.take().ok_or(Error::MissingCache)?;
        let batch = x.shape()[0];
        let (n_in, n_out) = (self.n_in(), self.n_out());
        if grad.shape() != [batch, n_out] {
            return Err(Error::ShapeMismatch {
                expected: vec![batch, n_out],
                got: grad.shape().to_vec(),
            });
        }
        gemm(
            true,
            false,
            n_in,
            batch,
            n_out,
            x.data(),
            grad.data(),
            &mut self.weight.grad,
            false,
        );
        let masked = self.train_masked && self.window.is_some();
        if let (true, Some(w)) = (masked, &self.window) {
            mask_in_place(&mut self.weight.grad, &w.mask);
        }
        if let Some(b) = &mut self.bias {
            b.grad.iter_mut().for_each(|g| *g = T::zero());
            for row in grad.data().chunks_exact(n_out) {
                for (acc, &g) in b.grad.iter_mut().zip(row) {
                    *acc += g;
                }
            }
        }
        if !need_input_grad {
            return Ok(None);
        }
        let weights = if masked {
            self.effective.as_slice()
        } else {
            self.weight.value.data()
        };
        let mut grad_x = Tensor::zeros(&[batch, n_in]);
        gemm(
            false,
            true,
            batch,
            n_out,
            n_in,
            grad.data(),
            weights,
            grad_x.data_mut(),
            false,
        );
        Ok(Some(grad_x))
    }
}
