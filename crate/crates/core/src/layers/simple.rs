use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{maxpool2x2_backward, maxpool2x2_batch, Tensor};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Relu {
    active: Option<Vec<bool>>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn infer<T: Scalar>(mut x: Tensor<T>) -> Tensor<T> {
        x.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
        x
    }

    pub fn forward<T: Scalar>(&mut self, mut x: Tensor<T>) -> Tensor<T> {
        let mut active = Vec::with_capacity(x.len());
        for v in x.data_mut() {
            let on = *v > T::zero();
            if !on {
                *v = T::zero();
            }
            active.push(on);
        }
        self.active = Some(active);
        x
    }

    pub fn backward<T: Scalar>(&mut self, mut grad: Tensor<T>) -> Result<Tensor<T>> {
        let active = self.active.take().ok_or(Error::MissingCache)?;
        if active.len() != grad.len() {
            return Err(Error::ShapeMismatch {
                expected: alloc::vec![active.len()],
                got: grad.shape().to_vec(),
            });
        }
        for (g, on) in grad.data_mut().iter_mut().zip(active) {
            if !on {
                *g = T::zero();
            }
        }
        Ok(grad)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flatten {
    input_shape: Option<Vec<usize>>,
}

impl Flatten {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn infer<T: Scalar>(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        let n = *x.shape().first().ok_or(Error::InvalidShape(Vec::new()))?;
        let rest = x.len() / n;
        x.reshape(&[n, rest])
    }

    pub fn forward<T: Scalar>(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        self.input_shape = Some(x.shape().to_vec());
        self.infer(x)
    }

    pub fn backward<T: Scalar>(&mut self, grad: Tensor<T>) -> Result<Tensor<T>> {
        let shape = self.input_shape.take().ok_or(Error::MissingCache)?;
        grad.reshape(&shape)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaxPool2x2 {
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPool2x2 {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn infer<T: Scalar>(&self, x: Tensor<T>) -> Result<Tensor<T>> {
        Ok(maxpool2x2_batch(&x)?.0)
    }

    pub fn forward<T: Scalar>(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        let (out, argmax) = maxpool2x2_batch(&x)?;
        self.cache = Some((argmax, x.shape().to_vec()));
        Ok(out)
    }

    pub fn backward<T: Scalar>(&mut self, grad: Tensor<T>) -> Result<Tensor<T>> {
        let (argmax, shape) = self.cache.take().ok_or(Error::MissingCache)?;
        maxpool2x2_backward(&grad, &argmax, &shape)
    }
}

/// Inverted dropout: survivors are scaled by `1 / (1 − rate)` at training
/// time so evaluation is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Dropout<T> {
    rate: f64,
    scale: Option<Vec<T>>,
}

impl<T: Scalar> Dropout<T> {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidLayer("dropout rate must lie in [0, 1)"));
        }
        Ok(Self { rate, scale: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// With `rng = None` (gradient checks) the layer passes input through.
    pub fn forward(&mut self, mut x: Tensor<T>, rng: Option<&mut dyn RngCore>) -> Result<Tensor<T>> {
        match rng {
            Some(rng) if self.rate > 0.0 => {
                let scale = draw_scale(x.len(), self.rate, rng);
                for (v, &s) in x.data_mut().iter_mut().zip(&scale) {
                    *v *= s;
                }
                self.scale = Some(scale);
            }
            _ => self.scale = Some(alloc::vec![T::one(); x.len()]),
        }
        Ok(x)
    }

    pub fn backward(&mut self, mut grad: Tensor<T>) -> Result<Tensor<T>> {
        let scale = self.scale.take().ok_or(Error::MissingCache)?;
        for (g, &s) in grad.data_mut().iter_mut().zip(&scale) {
            *g *= s;
        }
        Ok(grad)
    }
}

fn draw_scale<T: Scalar>(len: usize, rate: f64, rng: &mut dyn RngCore) -> Vec<T> {
    let keep = T::of_f64(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

/// Stateless dropout: identity when `training` is false or `rate` is 0.
pub fn dropout_forward<T: Scalar>(
    x: &Tensor<T>,
    rate: f64,
    rng: &mut dyn RngCore,
    training: bool,
) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument("dropout rate must lie in [0, 1)"));
    }
    let mut out = x.clone();
    if training && rate > 0.0 {
        let scale: Vec<T> = draw_scale(x.len(), rate, rng);
        for (v, s) in out.data_mut().iter_mut().zip(scale) {
            *v *= s;
        }
    }
    Ok(out)
}
