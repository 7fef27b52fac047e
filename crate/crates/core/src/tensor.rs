//! Row-major dense arrays and the numeric kernels the layers are built on.

use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{Precision, Scalar};

/// Dense n-dimensional array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, T::zero())
    }

    pub fn filled(shape: &[usize], value: T) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::InvalidShape(shape.to_vec()));
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::LengthMismatch {
                shape: shape.to_vec(),
                len: data.len(),
            });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(Error::LengthMismatch {
                shape: shape.to_vec(),
                len: self.data.len(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn sum(&self) -> T {
        self.data.iter().copied().sum()
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| U::of_f64(v.as_f64())).collect(),
        }
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    /// Value at a multi-index. Panics when the index is out of range.
    pub fn at(&self, index: &[usize]) -> T {
        assert_eq!(index.len(), self.shape.len());
        let mut flat = 0;
        for (i, (&ix, &dim)) in index.iter().zip(&self.shape).enumerate() {
            assert!(ix < dim, "index {ix} out of range on axis {i}");
            flat = flat * dim + ix;
        }
        self.data[flat]
    }
}

/// `c (+)= op(a) · op(b)` where `op(a)` is `m×k` and `op(b)` is `k×n`.
///
/// A transposed operand is stored in its untransposed row-major layout
/// (`k×m` for `a`, `n×k` for `b`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm<T: Scalar>(
    trans_a: bool,
    trans_b: bool,
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    b: &[T],
    c: &mut [T],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            c.iter_mut().for_each(|v| *v = T::zero());
        }
        return;
    }
    let (rsa, csa) = if trans_a { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if trans_b { (1, k as isize) } else { (n as isize, 1) };
    // SAFETY: the asserts above guarantee every stride/extent stays in bounds.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Matrix product of `a: m×k` and `b: k×n`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (m, k) = match a.shape() {
        &[m, k] => (m, k),
        s => return Err(Error::InvalidShape(s.to_vec())),
    };
    let n = match b.shape() {
        &[kb, n] if kb == k => n,
        s => {
            return Err(Error::ShapeMismatch {
                expected: vec![k, s.get(1).copied().unwrap_or(0)],
                got: s.to_vec(),
            })
        }
    };
    let mut out = Tensor::zeros(&[m, n]);
    gemm(false, false, m, k, n, a.data(), b.data(), out.data_mut(), false);
    Ok(out)
}

/// Spatial padding of a convolution. Stride is always 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Padding {
    /// Output keeps the input extent.
    Zero,
    /// Valid convolution, output shrinks by `k - 1`.
    None,
}

impl FromStr for Padding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "same" => Ok(Padding::Zero),
            "none" | "valid" => Ok(Padding::None),
            _ => Err(Error::InvalidArgument("unknown padding mode")),
        }
    }
}

/// Index bookkeeping for one batched convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeometry {
    pub n: usize,
    pub h: usize,
    pub w: usize,
    pub c_in: usize,
    pub kh: usize,
    pub kw: usize,
    pub pad_top: usize,
    pub pad_left: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(n: usize, h: usize, w: usize, c_in: usize, kh: usize, kw: usize, padding: Padding) -> Result<Self> {
        if kh == 0 || kw == 0 {
            return Err(Error::InvalidShape(vec![kh, kw]));
        }
        let (pad_top, pad_left, out_h, out_w) = match padding {
            Padding::Zero => ((kh - 1) / 2, (kw - 1) / 2, h, w),
            Padding::None => {
                if kh > h || kw > w {
                    return Err(Error::ShapeMismatch {
                        expected: vec![kh, kw],
                        got: vec![h, w],
                    });
                }
                (0, 0, h - kh + 1, w - kw + 1)
            }
        };
        Ok(Self {
            n,
            h,
            w,
            c_in,
            kh,
            kw,
            pad_top,
            pad_left,
            out_h,
            out_w,
        })
    }

    pub fn patch_len(&self) -> usize {
        self.kh * self.kw * self.c_in
    }

    pub fn rows(&self) -> usize {
        self.n * self.out_h * self.out_w
    }

    /// Input position feeding output `(oy, ox)` at kernel offset `(dy, dx)`,
    /// or `None` when it falls into the zero padding.
    #[inline]
    fn source(&self, oy: usize, ox: usize, dy: usize, dx: usize) -> Option<(usize, usize)> {
        let y = (oy + dy).checked_sub(self.pad_top)?;
        let x = (ox + dx).checked_sub(self.pad_left)?;
        (y < self.h && x < self.w).then_some((y, x))
    }
}

/// Expands NHWC input into a `(n·out_h·out_w) × (kh·kw·c_in)` patch matrix.
/// Column order is `(dy, dx, channel)`, matching a row-major `kh×kw×c_in×c_out`
/// kernel viewed as a `(kh·kw·c_in) × c_out` matrix.
pub(crate) fn im2col<T: Scalar>(x: &[T], g: &ConvGeometry) -> Vec<T> {
    let patch = g.patch_len();
    let mut cols = vec![T::zero(); g.rows() * patch];
    let mut row = 0;
    for b in 0..g.n {
        let image = &x[b * g.h * g.w * g.c_in..(b + 1) * g.h * g.w * g.c_in];
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let dst = &mut cols[row * patch..(row + 1) * patch];
                for dy in 0..g.kh {
                    for dx in 0..g.kw {
                        if let Some((y, xx)) = g.source(oy, ox, dy, dx) {
                            let s = (y * g.w + xx) * g.c_in;
                            let d = (dy * g.kw + dx) * g.c_in;
                            dst[d..d + g.c_in].copy_from_slice(&image[s..s + g.c_in]);
                        }
                    }
                }
                row += 1;
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: scatters patch-matrix gradients back onto the input.
pub(crate) fn col2im<T: Scalar>(cols: &[T], g: &ConvGeometry) -> Vec<T> {
    let patch = g.patch_len();
    let mut x = vec![T::zero(); g.n * g.h * g.w * g.c_in];
    let mut row = 0;
    for b in 0..g.n {
        let image = &mut x[b * g.h * g.w * g.c_in..(b + 1) * g.h * g.w * g.c_in];
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let src = &cols[row * patch..(row + 1) * patch];
                for dy in 0..g.kh {
                    for dx in 0..g.kw {
                        if let Some((y, xx)) = g.source(oy, ox, dy, dx) {
                            let d = (y * g.w + xx) * g.c_in;
                            let s = (dy * g.kw + dx) * g.c_in;
                            for c in 0..g.c_in {
                                image[d + c] += src[s + c];
                            }
                        }
                    }
                }
                row += 1;
            }
        }
    }
    x
}

/// Batched stride-1 cross-correlation: `x: n×h×w×c_in`, `k: kh×kw×c_in×c_out`.
pub fn conv2d_batch<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, padding: Padding) -> Result<Tensor<T>> {
    let &[n, h, w, c_in] = x.shape() else {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    };
    let &[kh, kw, kc, c_out] = kernel.shape() else {
        return Err(Error::InvalidShape(kernel.shape().to_vec()));
    };
    if kc != c_in {
        return Err(Error::ShapeMismatch {
            expected: vec![kh, kw, c_in, c_out],
            got: kernel.shape().to_vec(),
        });
    }
    let g = ConvGeometry::new(n, h, w, c_in, kh, kw, padding)?;
    let cols = im2col(x.data(), &g);
    let mut out = Tensor::zeros(&[n, g.out_h, g.out_w, c_out]);
    gemm(
        false,
        false,
        g.rows(),
        g.patch_len(),
        c_out,
        &cols,
        kernel.data(),
        out.data_mut(),
        false,
    );
    Ok(out)
}

/// Single-image cross-correlation: `x: h×w×c_in` → `h'×w'×c_out`.
pub fn conv2d<T: Scalar>(x: &Tensor<T>, kernel: &Tensor<T>, padding: Padding) -> Result<Tensor<T>> {
    let &[h, w, c] = x.shape() else {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    };
    let batched = x.clone().reshape(&[1, h, w, c])?;
    let out = conv2d_batch(&batched, kernel, padding)?;
    let s = out.shape().to_vec();
    out.reshape(&s[1..])
}

/// Batched non-overlapping 2×2 max pooling over `n×h×w×c`.
///
/// Returns the pooled tensor and, per output element, the flat input index
/// that produced it. Odd trailing rows/columns are dropped.
pub fn maxpool2x2_batch<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let &[n, h, w, c] = x.shape() else {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    };
    if h < 2 || w < 2 {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    }
    let (oh, ow) = (h / 2, w / 2);
    let src = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_ix = ((b * h + 2 * oy) * w + 2 * ox) * c + ch;
                    let mut best = src[best_ix];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let ix = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if src[ix] > best {
                            best = src[ix];
                            best_ix = ix;
                        }
                    }
                    out.push(best);
                    argmax.push(best_ix);
                }
            }
        }
    }
    Ok((Tensor::from_vec(&[n, oh, ow, c], out)?, argmax))
}

/// Single-image 2×2 max pooling over `h×w×c`.
pub fn maxpool2x2<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let &[h, w, c] = x.shape() else {
        return Err(Error::InvalidShape(x.shape().to_vec()));
    };
    let (out, idx) = maxpool2x2_batch(&x.clone().reshape(&[1, h, w, c])?)?;
    let s = out.shape().to_vec();
    Ok((out.reshape(&s[1..])?, idx))
}

/// Routes each pooled gradient to the input position recorded in `argmax`.
pub fn maxpool2x2_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![argmax.len()],
            got: grad_out.shape().to_vec(),
        });
    }
    let mut grad_in = Tensor::zeros(input_shape);
    let dst = grad_in.data_mut();
    for (&g, &ix) in grad_out.data().iter().zip(argmax) {
        dst[ix] += g;
    }
    Ok(grad_in)
}
