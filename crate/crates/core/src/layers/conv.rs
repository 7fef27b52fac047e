use alloc::vec;
use alloc::vec::Vec;

use super::{mask_in_place, masked_into, LayerWindow, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{col2im, gemm, im2col, ConvGeometry, Padding, Tensor};
use crate::window::WindowMatrix;

struct ConvCache<T> {
    cols: Vec<T>,
    geometry: ConvGeometry,
}

impl<T: Clone> Clone for ConvCache<T> {
    fn clone(&self) -> Self {
        Self {
            cols: self.cols.clone(),
            geometry: self.geometry,
        }
    }
}

impl<T> core::fmt::Debug for ConvCache<T> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ConvCache").field("geometry", &self.geometry).finish()
    }
}

impl<T> PartialEq for ConvCache<T> {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
    }
}

/// Stride-1 2-D convolution over NHWC input with a `kh × kw × c_in × c_out`
/// kernel and a bias per output channel.
///
/// A window is a `c_in × c_out` matrix shared by every spatial offset of the
/// kernel, so masking acts along the channel dimensions only.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
    kernel: Param<T>,
    bias: Param<T>,
    padding: Padding,
    window: Option<LayerWindow<T>>,
    train_masked: bool,
    cache: Option<ConvCache<T>>,
    effective: Vec<T>,
}

impl<T: Scalar> Conv2d<T> {
    pub fn from_parts(kernel: Tensor<T>, bias: Tensor<T>, padding: Padding) -> Result<Self> {
        let &[_, _, _, c_out] = kernel.shape() else {
            return Err(Error::InvalidShape(kernel.shape().to_vec()));
        };
        if bias.shape() != [c_out] {
            return Err(Error::ShapeMismatch {
                expected: vec![c_out],
                got: bias.shape().to_vec(),
            });
        }
        Ok(Self {
            kernel: Param::new(kernel),
            bias: Param::new(bias),
            padding,
            window: None,
            train_masked: false,
            cache: None,
            effective: Vec::new(),
        })
    }

    pub fn with_window(mut self, window: WindowMatrix, train_masked: bool) -> Result<Self> {
        if (window.n_x(), window.n_y()) != (self.c_in(), self.c_out()) {
            return Err(Error::ShapeMismatch {
                expected: vec![self.c_in(), self.c_out()],
                got: vec![window.n_x(), window.n_y()],
            });
        }
        if train_masked {
            let per_offset = self.c_in() * self.c_out();
            for offset in self.kernel.value.data_mut().chunks_exact_mut(per_offset) {
                for (w, &f) in offset.iter_mut().zip(window.values()) {
                    if f == 0.0 {
                        *w = T::zero();
                    }
                }
            }
        }
        self.window = Some(LayerWindow::new(window)?);
        self.train_masked = train_masked;
        Ok(self)
    }

    pub fn kernel_shape(&self) -> [usize; 4] {
        let s = self.kernel.value.shape();
        [s[0], s[1], s[2], s[3]]
    }

    pub fn c_in(&self) -> usize {
        self.kernel_shape()[2]
    }

    pub fn c_out(&self) -> usize {
        self.kernel_shape()[3]
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn kernel(&self) -> &Param<T> {
        &self.kernel
    }

    pub fn bias(&self) -> &Param<T> {
        &self.bias
    }

    pub fn window(&self) -> Option<&LayerWindow<T>> {
        self.window.as_ref()
    }

    pub fn is_window_target(&self) -> bool {
        self.window.is_some()
    }

    /// Kernel as used at evaluation: masked and rescaled when windowed.
    pub fn effective_kernel(&self) -> Tensor<T> {
        match &self.window {
            Some(w) => {
                let mut eff = Vec::new();
                masked_into(self.kernel.value.data(), &w.mask, &mut eff);
                Tensor::from_vec(self.kernel.value.shape(), eff).expect("kernel shape")
            }
            None => self.kernel.value.clone(),
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.kernel, &self.bias]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.kernel, &mut self.bias]
    }

    pub fn output_shape(&self, h: usize, w: usize) -> Result<[usize; 3]> {
        let [kh, kw, c_in, c_out] = self.kernel_shape();
        let g = ConvGeometry::new(1, h, w, c_in, kh, kw, self.padding)?;
        Ok([g.out_h, g.out_w, c_out])
    }

    fn geometry(&self, x: &Tensor<T>) -> Result<ConvGeometry> {
        let [kh, kw, c_in, _] = self.kernel_shape();
        match x.shape() {
            &[n, h, w, c] if c == c_in => ConvGeometry::new(n, h, w, c_in, kh, kw, self.padding),
            s => Err(Error::ShapeMismatch {
                expected: vec![s.first().copied().unwrap_or(0), kh, kw, c_in],
                got: s.to_vec(),
            }),
        }
    }

    fn apply(&self, cols: &[T], g: &ConvGeometry, kernel: &[T]) -> Result<Tensor<T>> {
        let c_out = self.c_out();
        let mut out = Tensor::zeros(&[g.n, g.out_h, g.out_w, c_out]);
        for row in out.data_mut().chunks_exact_mut(c_out) {
            row.copy_from_slice(self.bias.value.data());
        }
        gemm(
            false,
            false,
            g.rows(),
            g.patch_len(),
            c_out,
            cols,
            kernel,
            out.data_mut(),
            true,
        );
        Ok(out)
    }

    pub fn forward(&mut self, x: Tensor<T>) -> Result<Tensor<T>> {
        let g = self.geometry(&x)?;
        let cols = im2col(x.data(), &g);
        let out = match (&self.window, self.train_masked) {
            (Some(w), true) => {
                let mut eff = core::mem::take(&mut self.effective);
                masked_into(self.kernel.value.data(), &w.mask, &mut eff);
                let out = self.apply(&cols, &g, &eff);
                self.effective = eff;
                out?
            }
            _ => self.apply(&cols, &g, self.kernel.value.data())?,
        };
        self.cache = Some(ConvCache { cols, geometry: g });
        Ok(out)
    }

    pub fn infer(&self, x: Tensor<T>, window_override: Option<&[T]>) -> Result<Tensor<T>> {
        let g = self.geometry(&x)?;
        let cols = im2col(x.data(), &g);
        let mask = window_override.or(self.window.as_ref().map(|w| w.mask.as_slice()));
        match mask {
            Some(mask) => {
                if mask.len() != self.c_in() * self.c_out() {
                    return Err(Error::ShapeMismatch {
                        expected: vec![self.c_in(), self.c_out()],
                        got: vec![mask.len()],
                    });
                }
                let mut eff = Vec::new();
                masked_into(self.kernel.value.data(), mask, &mut eff);
                self.apply(&cols, &g, &eff)
            }
            None => self.apply(&cols, &g, self.kernel.value.data()),
        }
    }

    pub fn backward(&mut self, grad: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let ConvCache { cols, geometry: g } = self.cache.take().ok_or(Error::MissingCache)?;
        let c_out = self.c_out();
        if grad.shape() != [g.n, g.out_h, g.out_w, c_out] {
            return Err(Error::ShapeMismatch {
                expected: vec![g.n, g.out_h, g.out_w, c_out],
                got: grad.shape().to_vec(),
            });
        }
        let patch = g.patch_len();
        gemm(
            true,
            false,
            patch,
            g.rows(),
            c_out,
            &cols,
            grad.data(),
            &mut self.kernel.grad,
            false,
        );
        let masked = self.train_masked && self.window.is_some();
        if let (true, Some(w)) = (masked, &self.window) {
            mask_in_place(&mut self.kernel.grad, &w.mask);
        }
        self.bias.grad.iter_mut().for_each(|b| *b = T::zero());
        for row in grad.data().chunks_exact(c_out) {
            for (acc, &v) in self.bias.grad.iter_mut().zip(row) {
                *acc += v;
            }
        }
        if !need_input_grad {
            return Ok(None);
        }
        let kernel = if masked {
            self.effective.as_slice()
        } else {
            self.kernel.value.data()
        };
        let mut grad_cols = vec![T::zero(); g.rows() * patch];
        gemm(
            false,
            true,
            g.rows(),
            c_out,
            patch,
            grad.data(),
            kernel,
            &mut grad_cols,
            false,
        );
        let grad_x = col2im(&grad_cols, &g);
        Ok(Some(Tensor::from_vec(&[g.n, g.h, g.w, g.c_in], grad_x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tensor::conv2d_batch;
    use crate::window::{apply_channel_window, build_window, WindowKind, WindowSpec};
    use rand::Rng;

    fn random_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
        let mut r = rng::stream(seed, 9);
        let n = shape.iter().product();
        Tensor::from_vec(shape, (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn single_channel_window_is_plain() {
        let k = random_tensor(&[3, 3, 1, 1], 1);
        let b = random_tensor(&[1], 2);
        let x = random_tensor(&[2, 5, 5, 1], 3);
        let window = build_window(&WindowSpec::new(WindowKind::Diagonal, 0.5), 1, 1).unwrap();
        assert!(window.is_full());
        let plain = Conv2d::from_parts(k.clone(), b.clone(), Padding::Zero).unwrap();
        let windowed = Conv2d::from_parts(k, b, Padding::Zero)
            .unwrap()
            .with_window(window, true)
            .unwrap();
        assert_eq!(plain.infer(x.clone(), None).unwrap(), windowed.infer(x, None).unwrap());
    }

    #[test]
    fn windowed_matches_masked_kernel_oracle() {
        let k = random_tensor(&[3, 3, 4, 6], 4);
        let b = Tensor::zeros(&[6]);
        let x = random_tensor(&[2, 6, 6, 4], 5);
        let window = build_window(&WindowSpec::new(WindowKind::Diagonal, 0.5), 4, 6).unwrap();
        let masked = apply_channel_window(&k, &window).unwrap();
        let expected = conv2d_batch(&x, &masked, Padding::None).unwrap();
        let mut layer = Conv2d::from_parts(k, b, Padding::None)
            .unwrap()
            .with_window(window, false)
            .unwrap();
        let got = layer.infer(x.clone(), None).unwrap();
        for (g, e) in got.data().iter().zip(expected.data()) {
            assert!((g - e).abs() < 1e-12);
        }
        // disorganized: training pass ignores the window
        let plain = conv2d_batch(&x, &layer.kernel().value.clone(), Padding::None).unwrap();
        assert_eq!(layer.forward(x).unwrap(), plain);
    }

    #[test]
    fn rgb_band_structure() {
        // 3 × 64 channel window at 41.7%: each output filter reads a contiguous
        // run of input channels
        let window = build_window(&WindowSpec::new(WindowKind::Diagonal, 0.417), 3, 64).unwrap();
        let k = random_tensor(&[3, 3, 3, 64], 6);
        let layer = Conv2d::from_parts(k, Tensor::zeros(&[64]), Padding::Zero)
            .unwrap()
            .with_window(window, true)
            .unwrap();
        let eff = layer.effective_kernel();
        let mut single_channel = 0;
        for o in 0..64 {
            let used: Vec<usize> = (0..3)
                .filter(|&c| (0..9).any(|off| eff.data()[(off * 3 + c) * 64 + o] != 0.0))
                .collect();
            assert!(!used.is_empty());
            assert!(used.windows(2).all(|p| p[1] == p[0] + 1), "filter {o} uses {used:?}");
            if used.len() == 1 {
                single_channel += 1;
            }
        }
        assert!(single_channel > 0);
    }

    #[test]
    fn shape_errors() {
        let mut layer =
            Conv2d::from_parts(Tensor::<f64>::zeros(&[3, 3, 2, 4]), Tensor::zeros(&[4]), Padding::None).unwrap();
        assert!(layer.forward(Tensor::zeros(&[1, 5, 5, 3])).is_err());
        assert!(layer.forward(Tensor::zeros(&[1, 2, 2, 2])).is_err());
        assert_eq!(
            layer.backward(Tensor::zeros(&[1, 3, 3, 4]), false),
            Err(Error::MissingCache)
        );
        assert_eq!(layer.output_shape(32, 32).unwrap(), [30, 30, 4]);
    }
}
