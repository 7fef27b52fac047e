use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// He initialization: i.i.d. `N(0, 2 / fan_in)` draws.
pub fn he_init<T: Scalar>(shape: &[usize], fan_in: usize, rng: &mut dyn RngCore) -> Result<Tensor<T>> {
    if fan_in == 0 {
        return Err(Error::InvalidArgument("fan_in must be at least 1"));
    }
    let std = libm::sqrt(2.0 / fan_in as f64);
    let len = shape.iter().product();
    let data = (0..len)
        .map(|_| T::of_f64(std * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Tensor::from_vec(shape, data)
}

/// Glorot/Xavier uniform, `U(±√(6 / (fan_in + fan_out)))`. Used for the
/// softmax output layer, which is not a hidden layer.
pub fn glorot_uniform<T: Scalar>(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut dyn RngCore,
) -> Result<Tensor<T>> {
    if fan_in + fan_out == 0 {
        return Err(Error::InvalidArgument("fan_in + fan_out must be positive"));
    }
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let len = shape.iter().product();
    let data = (0..len).map(|_| T::of_f64(rng.random_range(-limit..limit))).collect();
    Tensor::from_vec(shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn sample_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn he_std_matches() {
        assert_eq!((2.0f64 / 2.0).sqrt(), 1.0);
        assert!(((2.0f64 / 784.0).sqrt() - 0.05051).abs() < 1e-5);
        let mut r = rng::stream(1, 0);
        for fan_in in [2usize, 784] {
            let t = he_init::<f64>(&[1_000_000], fan_in, &mut r).unwrap();
            let (mean, std) = sample_std(t.data());
            let expected = (2.0 / fan_in as f64).sqrt();
            assert!((std / expected - 1.0).abs() < 0.01, "std {std} vs {expected}");
            assert!(mean.abs() < 0.01 * expected);
        }
    }

    #[test]
    fn he_rejects_zero_fan_in() {
        let mut r = rng::stream(1, 0);
        assert!(he_init::<f32>(&[3], 0, &mut r).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut r = rng::stream(2, 0);
        let t = glorot_uniform::<f32>(&[512, 10], 512, 10, &mut r).unwrap();
        let limit = (6.0f32 / 522.0).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= limit));
    }
}
