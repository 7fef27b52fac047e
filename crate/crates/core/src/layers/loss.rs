use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean softmax cross-entropy over a batch of logits.
///
/// Returns the loss and `∂loss/∂logits = (softmax − onehot) / batch`.
pub fn softmax_crossentropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>)> {
    let &[batch, classes] = logits.shape() else {
        return Err(Error::InvalidShape(logits.shape().to_vec()));
    };
    if labels.len() != batch {
        return Err(Error::ShapeMismatch {
            expected: alloc::vec![batch],
            got: alloc::vec![labels.len()],
        });
    }
    let inv_batch = T::one() / T::of_f64(batch as f64);
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(batch * classes);
    for (row, &label) in logits.data().chunks_exact(classes).zip(labels) {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: T = exps.iter().copied().sum();
        // log softmax of the true class, without forming the probability
        loss -= (row[label] - max).as_f64() - sum.ln().as_f64();
        for (c, e) in exps.into_iter().enumerate() {
            let p = e / sum;
            let target = if c == label { T::one() } else { T::zero() };
            grad.push((p - target) * inv_batch);
        }
    }
    Ok((loss / batch as f64, Tensor::from_vec(logits.shape(), grad)?))
}
