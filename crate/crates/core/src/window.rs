//! Window matrices `F = (f_ij)` that mask `n_x × n_y` weight matrices.
//!
//! Rows index input nodes and columns index output nodes, matching the
//! `y = x · W` convention of the dense layer. The distance of element `(i, j)`
//! from the diagonal line `j = r·i` with `r = n_y / n_x` is
//!
//! ```text
//! d_ij = |r·i − j| / √(r² + 1) = |n_y·i − n_x·j| / √(n_x² + n_y²)
//! ```
//!
//! The integer numerator `|n_y·i − n_x·j|` is used as an exact sort key, so
//! ties in distance are ties in the key and never depend on rounding.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WindowKind {
    Full,
    Diagonal,
    Gaussian,
    Stripe,
    Centered,
    Random,
}

impl WindowKind {
    pub const ALL: [WindowKind; 6] = [
        WindowKind::Full,
        WindowKind::Diagonal,
        WindowKind::Gaussian,
        WindowKind::Stripe,
        WindowKind::Centered,
        WindowKind::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WindowKind::Full => "full",
            WindowKind::Diagonal => "diagonal",
            WindowKind::Gaussian => "gaussian",
            WindowKind::Stripe => "stripe",
            WindowKind::Centered => "centered",
            WindowKind::Random => "random",
        }
    }

    /// Windows whose values are all 0 or 1.
    pub fn is_binary(self) -> bool {
        self != WindowKind::Gaussian
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WindowKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or(Error::InvalidWindow("unknown window kind"))
    }
}

/// Declarative description of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub kind: WindowKind,
    /// Target parameter reduction ρ ∈ [0, 1); 0 keeps every weight.
    pub target_reduction: f64,
    /// Only used by [`WindowKind::Random`].
    pub seed: u64,
}

impl WindowSpec {
    /// A full window always has zero reduction, whatever `target_reduction` says.
    pub fn new(kind: WindowKind, target_reduction: f64) -> Self {
        let target_reduction = if kind == WindowKind::Full {
            0.0
        } else {
            target_reduction
        };
        Self {
            kind,
            target_reduction,
            seed: 0,
        }
    }

    pub fn full() -> Self {
        Self::new(WindowKind::Full, 0.0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let rho = self.target_reduction;
        if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
            return Err(Error::InvalidWindow("target reduction must lie in [0, 1)"));
        }
        if self.kind == WindowKind::Full && rho != 0.0 {
            return Err(Error::InvalidWindow("a full window has zero reduction"));
        }
        Ok(())
    }
}

/// A realized window with its achieved reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatrix {
    n_x: usize,
    n_y: usize,
    values: Vec<f64>,
    kind: WindowKind,
    target_reduction: f64,
    achieved_reduction: f64,
    /// Diagonal threshold or Gaussian σ, when the kind has one.
    parameter: Option<f64>,
}

impl WindowMatrix {
    /// Wraps explicit window values, e.g. hand-drawn masks in tests.
    pub fn from_values(n_x: usize, n_y: usize, values: Vec<f64>, kind: WindowKind) -> Result<Self> {
        if n_x == 0 || n_y == 0 || values.len() != n_x * n_y {
            return Err(Error::InvalidWindow("values do not match n_x × n_y"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidWindow("window values must lie in [0, 1]"));
        }
        let achieved_reduction = reduction_of(&values);
        Ok(Self {
            n_x,
            n_y,
            values,
            kind,
            target_reduction: achieved_reduction,
            achieved_reduction,
            parameter: None,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_y + j]
    }

    pub fn target_reduction(&self) -> f64 {
        self.target_reduction
    }

    pub fn achieved_reduction(&self) -> f64 {
        self.achieved_reduction
    }

    pub fn parameter(&self) -> Option<f64> {
        self.parameter
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// `f_ij · N / Σf`, the factor each weight is multiplied by.
    pub fn scaled_mask<T: Scalar>(&self) -> Result<Vec<T>> {
        let total = self.sum();
        if total <= 0.0 {
            return Err(Error::EmptyWindow);
        }
        let scale = (self.values.len() as f64) / total;
        Ok(self.values.iter().map(|&f| T::of_f64(f * scale)).collect())
    }
}

fn reduction_of(values: &[f64]) -> f64 {
    1.0 - values.iter().sum::<f64>() / values.len() as f64
}

/// `1 − Σf / (n_x · n_y)`: 0 for a full window, 1 for an empty one.
pub fn reduction_ratio(window: &WindowMatrix) -> f64 {
    reduction_of(&window.values)
}

#[inline]
fn distance_key(i: usize, j: usize, n_x: usize, n_y: usize) -> u64 {
    (n_y as u64 * i as u64).abs_diff(n_x as u64 * j as u64)
}

#[inline]
fn key_scale(n_x: usize, n_y: usize) -> f64 {
    let (a, b) = (n_x as f64, n_y as f64);
    libm::sqrt(a * a + b * b)
}

/// Distance of weight element `(i, j)` from the diagonal line `j = r·i`.
pub fn node_distance(i: usize, j: usize, n_x: usize, n_y: usize) -> f64 {
    distance_key(i, j, n_x, n_y) as f64 / key_scale(n_x, n_y)
}

fn sorted_keys(n_x: usize, n_y: usize) -> Vec<u64> {
    let mut keys = Vec::with_capacity(n_x * n_y);
    for i in 0..n_x {
        for j in 0..n_y {
            keys.push(distance_key(i, j, n_x, n_y));
        }
    }
    keys.sort_unstable();
    keys
}

fn check_dims(n_x: usize, n_y: usize) -> Result<()> {
    if n_x == 0 || n_y == 0 {
        Err(Error::InvalidWindow("window dimensions must be positive"))
    } else {
        Ok(())
    }
}

fn check_target(rho: f64) -> Result<()> {
    if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
        Err(Error::InvalidWindow("target reduction must lie in [0, 1)"))
    } else {
        Ok(())
    }
}

/// Kept-element count `round((1 − ρ)·N)`, at least 1.
fn kept_count(rho: f64, total: usize) -> usize {
    (libm::round((1.0 - rho) * total as f64) as usize).clamp(1, total)
}

/// Returns the integer key threshold and the number of kept elements.
fn diagonal_key_threshold(n_x: usize, n_y: usize, rho: f64) -> (u64, usize) {
    let keys = sorted_keys(n_x, n_y);
    let k = kept_count(rho, keys.len());
    let threshold = keys[k - 1];
    let kept = keys.partition_point(|&key| key <= threshold);
    (threshold, kept)
}

/// Distance threshold of a diagonal band window and its achieved reduction.
///
/// The threshold is the k-th smallest distance with `k = round((1 − ρ)·N)`.
/// Every element with `d ≤ threshold` is kept, so ties at the threshold can
/// keep slightly more than `k` elements.
pub fn solve_diagonal_threshold(n_x: usize, n_y: usize, target_reduction: f64) -> Result<(f64, f64)> {
    check_dims(n_x, n_y)?;
    check_target(target_reduction)?;
    let (key, kept) = diagonal_key_threshold(n_x, n_y, target_reduction);
    let total = (n_x * n_y) as f64;
    Ok((key as f64 / key_scale(n_x, n_y), 1.0 - kept as f64 / total))
}

/// Distinct distances with multiplicities, used to evaluate Gaussian sums cheaply.
fn distance_histogram(n_x: usize, n_y: usize) -> Vec<(f64, usize)> {
    let scale = key_scale(n_x, n_y);
    let mut hist: Vec<(f64, usize)> = Vec::new();
    let mut last = None;
    for key in sorted_keys(n_x, n_y) {
        if last == Some(key) {
            hist.last_mut().unwrap().1 += 1;
        } else {
            hist.push((key as f64 / scale, 1));
            last = Some(key);
        }
    }
    hist
}

#[inline]
fn gaussian(d: f64, sigma: f64) -> f64 {
    libm::exp(-(d * d) / (2.0 * sigma * sigma))
}

fn gaussian_reduction(hist: &[(f64, usize)], total: f64, sigma: f64) -> f64 {
    let kept: f64 = hist.iter().map(|&(d, count)| count as f64 * gaussian(d, sigma)).sum();
    1.0 - kept / total
}

/// Gaussian width σ whose window reaches the target reduction, found by
/// bisection (the window sum grows monotonically with σ).
pub fn solve_gaussian_sigma(n_x: usize, n_y: usize, target_reduction: f64) -> Result<(f64, f64)> {
    check_dims(n_x, n_y)?;
    check_target(target_reduction)?;
    if target_reduction == 0.0 {
        return Err(Error::InvalidWindow(
            "gaussian window needs a positive reduction; use a full window",
        ));
    }
    let hist = distance_histogram(n_x, n_y);
    let total = (n_x * n_y) as f64;
    // as σ → 0 only the elements exactly on the diagonal line survive
    let on_line = if hist[0].0 == 0.0 { hist[0].1 } else { 0 };
    if target_reduction >= 1.0 - on_line as f64 / total {
        return Err(Error::InvalidWindow("target reduction is not reachable"));
    }

    let mut hi = hist.last().map(|h| h.0).unwrap_or(1.0).max(1.0);
    while gaussian_reduction(&hist, total, hi) > target_reduction {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gaussian_reduction(&hist, total, mid) > target_reduction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    Ok((sigma, gaussian_reduction(&hist, total, sigma)))
}

/// Absolute reduction tolerance the stripe and centered builders aim for.
const BINARY_TOLERANCE: f64 = 0.005;

/// Stripe period `m` and kept rows per period `k = round(keep·m)`: the
/// smallest period whose realized kept-row fraction over `n_x` rows lies
/// within 1% of `keep` (and within [`BINARY_TOLERANCE`]). Falls back to the
/// most accurate period when none qualifies.
fn stripe_period(keep: f64, n_x: usize) -> (usize, usize) {
    let tol = (0.01 * keep).min(BINARY_TOLERANCE);
    let mut best = (1, 1, f64::INFINITY);
    for m in 1..=n_x {
        let k = (libm::round(keep * m as f64) as usize).clamp(1, m);
        let rows = (n_x / m) * k + (n_x % m).min(k);
        let err = (rows as f64 / n_x as f64 - keep).abs();
        if err <= tol {
            return (m, k);
        }
        if err < best.2 {
            best = (m, k, err);
        }
    }
    (best.0, best.1)
}

/// Side lengths of the centered block. Starts from `round(√keep·n)` per side;
/// if that misses the target by more than half of [`BINARY_TOLERANCE`], picks
/// the least-distorted `a × b` block that does not (or the most accurate one).
fn centered_block(keep: f64, n_x: usize, n_y: usize) -> (usize, usize) {
    let side = libm::sqrt(keep);
    let a0 = (libm::round(side * n_x as f64) as usize).clamp(1, n_x);
    let b0 = (libm::round(side * n_y as f64) as usize).clamp(1, n_y);
    let total = (n_x * n_y) as f64;
    let err = |a: usize, b: usize| ((a * b) as f64 / total - keep).abs();
    let tol = 0.5 * BINARY_TOLERANCE;
    if err(a0, b0) <= tol {
        return (a0, b0);
    }
    let distortion = |a: usize, b: usize| libm::fabs(libm::log((a * n_y) as f64 / (b * n_x) as f64));
    let target = keep * total;
    let mut within: Option<(usize, usize)> = None;
    let mut closest = (a0, b0);
    for a in 1..=n_x {
        let b_lo = libm::floor(target / a as f64) as usize;
        for b in [b_lo, b_lo + 1] {
            if b == 0 || b > n_y {
                continue;
            }
            if err(a, b) < err(closest.0, closest.1) {
                closest = (a, b);
            }
            if err(a, b) <= tol && within.is_none_or(|(wa, wb)| distortion(a, b) < distortion(wa, wb)) {
                within = Some((a, b));
            }
        }
    }
    within.unwrap_or(closest)
}

/// Builds the window described by `spec` for an `n_x × n_y` weight matrix.
pub fn build_window(spec: &WindowSpec, n_x: usize, n_y: usize) -> Result<WindowMatrix> {
    spec.validate()?;
    check_dims(n_x, n_y)?;
    let rho = spec.target_reduction;
    let total = n_x * n_y;
    let mut values = vec![0.0; total];
    let mut parameter = None;

    match spec.kind {
        WindowKind::Full => values.iter_mut().for_each(|v| *v = 1.0),
        WindowKind::Diagonal => {
            let (key, _) = diagonal_key_threshold(n_x, n_y, rho);
            for i in 0..n_x {
                for j in 0..n_y {
                    if distance_key(i, j, n_x, n_y) <= key {
                        values[i * n_y + j] = 1.0;
                    }
                }
            }
            parameter = Some(key as f64 / key_scale(n_x, n_y));
        }
        WindowKind::Gaussian => {
            let (sigma, _) = solve_gaussian_sigma(n_x, n_y, rho)?;
            for i in 0..n_x {
                for j in 0..n_y {
                    values[i * n_y + j] = gaussian(node_distance(i, j, n_x, n_y), sigma);
                }
            }
            parameter = Some(sigma);
        }
        WindowKind::Stripe => {
            let (period, kept) = stripe_period(1.0 - rho, n_x);
            for i in (0..n_x).filter(|i| i % period < kept) {
                values[i * n_y..(i + 1) * n_y].iter_mut().for_each(|v| *v = 1.0);
            }
        }
        WindowKind::Centered => {
            let (a, b) = centered_block(1.0 - rho, n_x, n_y);
            let (top, left) = ((n_x - a) / 2, (n_y - b) / 2);
            for i in top..top + a {
                values[i * n_y + left..i * n_y + left + b]
                    .iter_mut()
                    .for_each(|v| *v = 1.0);
            }
        }
        WindowKind::Random => {
            let kept = (libm::floor((1.0 - rho) * total as f64) as usize).clamp(1, total);
            let mut rng = rng::stream(spec.seed, rng::STREAM_WINDOW);
            for ix in rand::seq::index::sample(&mut rng, total, kept) {
                values[ix] = 1.0;
            }
        }
    }

    let achieved_reduction = reduction_of(&values);
    Ok(WindowMatrix {
        n_x,
        n_y,
        values,
        kind: spec.kind,
        target_reduction: rho,
        achieved_reduction,
        parameter,
    })
}

/// `W' = (W ⊙ F) · N / Σf` for an `n_x × n_y` weight matrix.
pub fn apply_window<T: Scalar>(weights: &Tensor<T>, window: &WindowMatrix) -> Result<Tensor<T>> {
    if weights.shape() != [window.n_x, window.n_y] {
        return Err(Error::ShapeMismatch {
            expected: vec![window.n_x, window.n_y],
            got: weights.shape().to_vec(),
        });
    }
    let mask = window.scaled_mask::<T>()?;
    let data = weights.data().iter().zip(&mask).map(|(&w, &m)| w * m).collect();
    Tensor::from_vec(weights.shape(), data)
}

/// Applies a `c_in × c_out` channel window to every spatial offset of a
/// `kh × kw × c_in × c_out` kernel.
pub fn apply_channel_window<T: Scalar>(kernel: &Tensor<T>, window: &WindowMatrix) -> Result<Tensor<T>> {
    let &[kh, kw, c_in, c_out] = kernel.shape() else {
        return Err(Error::InvalidShape(kernel.shape().to_vec()));
    };
    if (c_in, c_out) != (window.n_x, window.n_y) {
        return Err(Error::ShapeMismatch {
            expected: vec![kh, kw, window.n_x, window.n_y],
            got: kernel.shape().to_vec(),
        });
    }
    let mask = window.scaled_mask::<T>()?;
    let data = kernel
        .data()
        .chunks_exact(c_in * c_out)
        .flat_map(|offset| offset.iter().zip(&mask).map(|(&w, &m)| w * m))
        .collect();
    Tensor::from_vec(kernel.shape(), data)
}

/// Fraction of entries with `|w| < cutoff`; the reduction reported for L1-regularized layers.
pub fn zero_fraction<T: Scalar>(weights: &[T], cutoff: f64) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    let zeros = weights.iter().filter(|w| Float::abs(w.as_f64()) < cutoff).count();
    zeros as f64 / weights.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn distance_examples() {
        assert_eq!(node_distance(0, 0, 5, 5), 0.0);
        assert_relative_eq!(node_distance(4, 0, 5, 5), 4.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_eq!(node_distance(2, 4, 5, 10), 0.0);
    }

    #[test]
    fn diagonal_threshold_zero_keeps_all() {
        let (t, achieved) = solve_diagonal_threshold(7, 5, 0.0).unwrap();
        assert_eq!(achieved, 0.0);
        for i in 0..7 {
            for j in 0..5 {
                assert!(node_distance(i, j, 7, 5) <= t);
            }
        }
    }

    #[test]
    fn five_by_five_band() {
        // |i−j| ≤ 1 keeps 5 + 4 + 4 = 13 of 25
        let (t, achieved) = solve_diagonal_threshold(5, 5, 1.0 - 13.0 / 25.0).unwrap();
        assert_relative_eq!(t, 1.0 / 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(achieved, 0.48, epsilon = 1e-12);
        let w = build_window(&WindowSpec::new(WindowKind::Diagonal, 0.48), 5, 5).unwrap();
        assert_relative_eq!(reduction_ratio(&w), 0.48, epsilon = 1e-12);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(w.get(i, j) == 1.0, i.abs_diff(j) <= 1);
            }
        }
    }

    #[test]
    fn gaussian_at_sigma() {
        assert_relative_eq!(gaussian(2.5, 2.5), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(gaussian(2.5, 2.5), 0.60653, epsilon = 1e-5);
    }

    #[test]
    fn gaussian_rejects_zero_target() {
        assert!(solve_gaussian_sigma(8, 8, 0.0).is_err());
        assert!(build_window(&WindowSpec::new(WindowKind::Gaussian, 0.0), 8, 8).is_err());
    }

    #[test]
    fn gaussian_wide_sigma_approaches_full() {
        let hist = distance_histogram(16, 16);
        assert!(gaussian_reduction(&hist, 256.0, 1e6) < 1e-9);
    }

    #[test]
    fn full_window() {
        let w = build_window(&WindowSpec::new(WindowKind::Full, 0.7), 3, 9).unwrap();
        assert!(w.is_full());
        assert_eq!(w.achieved_reduction(), 0.0);
        assert_eq!(w.target_reduction(), 0.0);
    }

    #[test]
    fn random_exact_count_and_reproducible() {
        let spec = WindowSpec::new(WindowKind::Random, 0.5).with_seed(42);
        let a = build_window(&spec, 10, 10).unwrap();
        let b = build_window(&spec, 10, 10).unwrap();
        assert_eq!(a.sum(), 50.0);
        assert_eq!(a, b);
        let c = build_window(&spec.with_seed(43), 10, 10).unwrap();
        assert_ne!(a.values(), c.values());
        assert_eq!(c.sum(), 50.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(build_window(&WindowSpec::new(WindowKind::Diagonal, 1.0), 4, 4).is_err());
        assert!(build_window(&WindowSpec::new(WindowKind::Diagonal, -0.1), 4, 4).is_err());
        assert!(build_window(&WindowSpec::new(WindowKind::Diagonal, f64::NAN), 4, 4).is_err());
        assert!(build_window(&WindowSpec::new(WindowKind::Diagonal, 0.5), 0, 4).is_err());
        let bad = WindowSpec {
            kind: WindowKind::Full,
            target_reduction: 0.3,
            seed: 0,
        };
        assert!(build_window(&bad, 4, 4).is_err());
        assert_eq!("diagonal".parse::<WindowKind>().unwrap(), WindowKind::Diagonal);
        assert!("band".parse::<WindowKind>().is_err());
    }

    #[test]
    fn reduction_ratio_extremes() {
        let ones = WindowMatrix::from_values(2, 3, vec![1.0; 6], WindowKind::Full).unwrap();
        assert_eq!(reduction_ratio(&ones), 0.0);
        let zeros = WindowMatrix::from_values(2, 3, vec![0.0; 6], WindowKind::Random).unwrap();
        assert_eq!(reduction_ratio(&zeros), 1.0);
    }

    #[test]
    fn apply_window_examples() {
        let w = Tensor::from_vec(&[2, 2], vec![1.0f64; 4]).unwrap();
        let eye = WindowMatrix::from_values(2, 2, vec![1.0, 0.0, 0.0, 1.0], WindowKind::Diagonal).unwrap();
        let out = apply_window(&w, &eye).unwrap();
        assert_eq!(out.data(), &[2.0, 0.0, 0.0, 2.0]);
        assert_eq!(out.sum(), 4.0);

        let arbitrary = Tensor::from_vec(&[2, 2], vec![0.3f64, -1.7, 2.2, 5.0]).unwrap();
        let full = WindowMatrix::from_values(2, 2, vec![1.0; 4], WindowKind::Full).unwrap();
        assert_eq!(apply_window(&arbitrary, &full).unwrap(), arbitrary);

        let empty = WindowMatrix::from_values(2, 2, vec![0.0; 4], WindowKind::Random).unwrap();
        assert_eq!(apply_window(&w, &empty), Err(Error::EmptyWindow));
        let wrong = Tensor::<f64>::zeros(&[2, 3]);
        assert!(apply_window(&wrong, &eye).is_err());
    }

    #[test]
    fn channel_window_broadcasts_over_offsets() {
        let kernel = Tensor::from_vec(&[2, 1, 2, 2], vec![1.0f64; 8]).unwrap();
        let eye = WindowMatrix::from_values(2, 2, vec![1.0, 0.0, 0.0, 1.0], WindowKind::Diagonal).unwrap();
        let out = apply_channel_window(&kernel, &eye).unwrap();
        assert_eq!(out.data(), &[2.0, 0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn stripe_and_centered_shapes() {
        let s = build_window(&WindowSpec::new(WindowKind::Stripe, 0.5), 8, 4).unwrap();
        for i in 0..8 {
            let row: f64 = (0..4).map(|j| s.get(i, j)).sum();
            assert_eq!(row, if i % 2 == 0 { 4.0 } else { 0.0 });
        }
        let c = build_window(&WindowSpec::new(WindowKind::Centered, 0.75), 8, 8).unwrap();
        // side √0.25·8 = 4, centered at rows/cols 2..6
        for i in 0..8 {
            for j in 0..8 {
                let inside = (2..6).contains(&i) && (2..6).contains(&j);
                assert_eq!(c.get(i, j) == 1.0, inside);
            }
        }
    }

    #[test]
    fn zero_fraction_cutoff() {
        assert_eq!(zero_fraction(&[0.0f64, 5e-5, -9.99e-5, 1e-4, 0.3], 1e-4), 0.6);
    }
}
