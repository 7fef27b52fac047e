//! Optimizers, the mini-batch training loop and evaluation.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;

use crate::data::{Dataset, Split};
use crate::error::{Error, Result};
use crate::layers::{softmax_crossentropy, Layer, Param};
use crate::network::{Network, WindowOverride};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::window::zero_fraction;

/// Weights with magnitude below this count as pruned for L1-regularized layers.
pub const L1_ZERO_CUTOFF: f64 = 1e-4;

const EVAL_BATCH: usize = 500;

/// When the window is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Windows constrain training; masked weights stay at zero.
    Developmental,
    /// Training is unconstrained; windows only apply at evaluation.
    Disorganized,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Developmental => "developmental",
            Regime::Disorganized => "disorganized",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "developmental" | "dev" => Ok(Regime::Developmental),
            "disorganized" | "dis" => Ok(Regime::Disorganized),
            _ => Err(Error::InvalidArgument("regime must be developmental or disorganized")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    RmsProp { lr: f64, rho: f64, eps: f64, decay: f64 },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn rmsprop(lr: f64, decay: f64) -> Self {
        Optimizer::RmsProp {
            lr,
            rho: 0.9,
            eps: 1e-7,
            decay,
        }
    }

    /// Learning rate used for the update after `iteration` previous updates.
    pub fn learning_rate(&self, iteration: u64) -> f64 {
        match *self {
            Optimizer::Adam { lr, .. } => lr,
            Optimizer::RmsProp { lr, decay, .. } => lr / (1.0 + decay * iteration as f64),
        }
    }

    /// Applies one update to `param` using its current gradient.
    /// `iteration` counts the updates already applied (0 for the first).
    pub fn step<T: Scalar>(&self, param: &mut Param<T>, iteration: u64) {
        let Param {
            value,
            grad,
            first_moment,
            second_moment,
        } = param;
        match *self {
            Optimizer::Adam { lr, beta1, beta2, eps } => adam_step(
                value.data_mut(),
                grad,
                first_moment,
                second_moment,
                lr,
                beta1,
                beta2,
                eps,
                iteration + 1,
            ),
            Optimizer::RmsProp { rho, eps, .. } => rmsprop_step(
                value.data_mut(),
                grad,
                second_moment,
                self.learning_rate(iteration),
                rho,
                eps,
            ),
        }
    }
}

/// Zero for magnitudes below the smallest normal value `tiny`.
#[inline]
fn flush_subnormal<T: Scalar>(x: T, tiny: T) -> T {
    if x.abs() < tiny {
        T::zero()
    } else {
        x
    }
}

/// Adam update with bias correction; `t` is the 1-based step number.
/// Moment estimates that decay below the normal range are set to zero.
#[allow(clippy::too_many_arguments)]
pub fn adam_step<T: Scalar>(
    w: &mut [T],
    g: &[T],
    m: &mut [T],
    v: &mut [T],
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
) {
    let c1 = 1.0 - libm::pow(beta1, t as f64);
    let c2 = 1.0 - libm::pow(beta2, t as f64);
    let (b1, b2) = (T::of_f64(beta1), T::of_f64(beta2));
    let (one_b1, one_b2) = (T::of_f64(1.0 - beta1), T::of_f64(1.0 - beta2));
    let (inv_c1, inv_c2) = (T::of_f64(1.0 / c1), T::of_f64(1.0 / c2));
    let (lr, eps) = (T::of_f64(lr), T::of_f64(eps));
    let tiny = T::min_positive_value();
    for (((w, &g), m), v) in w.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
        *m = flush_subnormal(b1 * *m + one_b1 * g, tiny);
        *v = flush_subnormal(b2 * *v + one_b2 * g * g, tiny);
        let m_hat = *m * inv_c1;
        let v_hat = *v * inv_c2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// RMSprop update with an already-decayed learning rate.
pub fn rmsprop_step<T: Scalar>(w: &mut [T], g: &[T], v: &mut [T], lr: f64, rho: f64, eps: f64) {
    let (rho_t, one_rho) = (T::of_f64(rho), T::of_f64(1.0 - rho));
    let (lr, eps) = (T::of_f64(lr), T::of_f64(eps));
    let tiny = T::min_positive_value();
    for ((w, &g), v) in w.iter_mut().zip(g).zip(v.iter_mut()) {
        *v = flush_subnormal(rho_t * *v + one_rho * g * g, tiny);
        *w -= lr * g / (v.sqrt() + eps);
    }
}

/// `λ Σ|w|` and its subgradient `λ sign(w)` (zero at zero).
pub fn l1_penalty<T: Scalar>(weights: &[T], lambda: f64) -> (f64, Vec<T>) {
    let penalty = lambda * weights.iter().map(|w| w.as_f64().abs()).sum::<f64>();
    let lam = T::of_f64(lambda);
    let grad = weights
        .iter()
        .map(|&w| {
            if w > T::zero() {
                lam
            } else if w < T::zero() {
                -lam
            } else {
                T::zero()
            }
        })
        .collect();
    (penalty, grad)
}

/// Total L1 penalty of the network's regularized layers.
pub(crate) fn network_l1<T: Scalar>(net: &Network<T>) -> f64 {
    net.layers()
        .iter()
        .filter_map(|l| match l {
            Layer::Dense(d) => d.l1_lambda().map(|lam| l1_penalty(d.weight().value.data(), lam).0),
            _ => None,
        })
        .sum()
}

/// Adds `λ sign(w)` to the weight gradients of regularized layers.
pub(crate) fn add_l1_gradients<T: Scalar>(net: &mut Network<T>) {
    for layer in net.layers_mut() {
        if let Layer::Dense(d) = layer {
            if let Some(lam) = d.l1_lambda() {
                let w = d.weight_mut();
                let (_, g) = l1_penalty(w.value.data(), lam);
                for (acc, g) in w.grad.iter_mut().zip(g) {
                    *acc += g;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Seeds shuffling and dropout.
    pub seed: u64,
    /// Copied into every record.
    pub session: usize,
}

impl TrainConfig {
    pub fn new(epochs: usize, optimizer: Optimizer, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: 32,
            optimizer,
            seed,
            session: 0,
        }
    }
}

/// One row of the metrics log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub session: usize,
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    pub error_pct: f64,
    pub reduction_target: f64,
    pub reduction_achieved: f64,
    pub window: String,
    pub seed: u64,
}

/// Loss and classification error of one evaluation pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub error_pct: f64,
}

/// Window label, target and achieved reduction of the network's first
/// window-target (or L1-regularized) layer; `("full", 0, 0)` if none.
pub fn describe_window<T: Scalar>(net: &Network<T>) -> (String, f64, f64) {
    for layer in net.layers() {
        if let Layer::Dense(d) = layer {
            if d.l1_lambda().is_some() {
                return ("l1".into(), 0.0, zero_fraction(d.weight().value.data(), L1_ZERO_CUTOFF));
            }
        }
        if let Some(w) = layer.window() {
            let m = &w.matrix;
            return (m.kind().to_string(), m.target_reduction(), m.achieved_reduction());
        }
    }
    ("full".into(), 0.0, 0.0)
}

fn count_errors<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> usize {
    let classes = logits.shape()[1];
    logits
        .data()
        .chunks_exact(classes)
        .zip(labels)
        .filter(|(row, &label)| {
            let mut best = 0;
            for (k, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = k;
                }
            }
            best != label
        })
        .count()
}

fn check_dataset<T: Scalar>(net: &Network<T>, data: &Dataset) -> Result<()> {
    if data.shape() != net.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: net.input_shape().to_vec(),
            got: data.shape().to_vec(),
        });
    }
    if data.n_classes() > net.n_classes() {
        return Err(Error::LabelOutOfRange {
            label: data.n_classes() - 1,
            classes: net.n_classes(),
        });
    }
    Ok(())
}

/// Evaluates without touching any weights. The network's own windows apply
/// unless `window` overrides them.
pub fn evaluate<T: Scalar>(net: &Network<T>, data: &Dataset, window: Option<&WindowOverride<T>>) -> Result<Evaluation> {
    check_dataset(net, data)?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("evaluation set is empty"));
    }
    let (mut loss, mut errors) = (0.0, 0);
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_BATCH) {
        let (x, labels) = data.batch::<T>(chunk)?;
        let logits = net.infer(x, window)?;
        let (l, _) = softmax_crossentropy(&logits, &labels)?;
        loss += l * chunk.len() as f64;
        errors += count_errors(&logits, &labels);
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        error_pct: 100.0 * errors as f64 / n,
    })
}

/// Mini-batch training. Returns one train record per epoch, plus one val
/// record per epoch when `val` is given. A non-finite loss aborts training.
pub fn fit<T: Scalar>(
    net: &mut Network<T>,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<Vec<MetricsRecord>> {
    check_dataset(net, train)?;
    if let Some(v) = val {
        check_dataset(net, v)?;
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1"));
    }
    if train.is_empty() && cfg.epochs > 0 {
        return Err(Error::InvalidArgument("training set is empty"));
    }
    let mut rng = rng::stream(cfg.seed, rng::STREAM_TRAIN);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut iteration = 0u64;
    let mut records = Vec::new();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut errors) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let (x, labels) = train.batch::<T>(batch)?;
            let logits = net.forward(x, Some(&mut rng))?;
            let (ce, grad) = softmax_crossentropy(&logits, &labels)?;
            let loss = ce + network_l1(net);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            loss_sum += loss * batch.len() as f64;
            errors += count_errors(&logits, &labels);
            net.backward(grad, false)?;
            add_l1_gradients(net);
            for p in net.params_mut() {
                cfg.optimizer.step(p, iteration);
            }
            iteration += 1;
        }
        let (window, target, achieved) = describe_window(net);
        let n = train.len() as f64;
        let record = |split, loss, error_pct| MetricsRecord {
            session: cfg.session,
            epoch,
            split,
            loss,
            error_pct,
            reduction_target: target,
            reduction_achieved: achieved,
            window: window.clone(),
            seed: cfg.seed,
        };
        records.push(record(Split::Train, loss_sum / n, 100.0 * errors as f64 / n));
        if let Some(v) = val {
            let e = evaluate(net, v, None)?;
            records.push(record(Split::Val, e.loss, e.error_pct));
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic_blobs;
    use crate::network::{LayerSpec, NetworkSpec};
    use crate::window::{WindowKind, WindowSpec};

    #[test]
    fn adam_first_step() {
        let mut w = [0.0f64];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_step(&mut w, &[1.0], &mut m, &mut v, 1e-3, 0.9, 0.999, 1e-8, 1);
        assert!((w[0] + 9.99999e-4).abs() < 1e-9, "{}", w[0]);
    }

    #[test]
    fn rmsprop_first_step_and_decay() {
        let mut w = [0.0f64];
        let mut v = [0.0];
        let opt = Optimizer::rmsprop(1e-4, 1e-6);
        rmsprop_step(&mut w, &[1.0], &mut v, opt.learning_rate(0), 0.9, 1e-7);
        assert!((w[0] + 3.1623e-4).abs() < 1e-8, "{}", w[0]);
        assert!((opt.learning_rate(1_000_000) - 5e-5).abs() < 1e-18);
    }

    #[test]
    fn optimizers_minimize_square() {
        for opt in [Optimizer::adam(0.1), Optimizer::rmsprop(0.05, 0.0)] {
            let mut p = Param::new(Tensor::from_vec(&[1], vec![1.0f64]).unwrap());
            let mut reached = None;
            for it in 0..1000 {
                p.grad[0] = 2.0 * p.value.data()[0];
                opt.step(&mut p, it);
                if p.value.data()[0].abs() < 1e-2 {
                    reached = Some(it);
                    break;
                }
            }
            assert!(reached.is_some(), "{opt:?} ended at {}", p.value.data()[0]);
        }
    }

    #[test]
    fn l1_example() {
        let (pen, grad) = l1_penalty(&[1.0f64, -2.0], 0.5);
        assert_eq!(pen, 1.5);
        assert_eq!(grad, vec![0.5, -0.5]);
        assert_eq!(l1_penalty(&[0.0f64], 0.5).1, vec![0.0]);
    }

    fn blob_net(window: Option<WindowSpec>) -> NetworkSpec {
        NetworkSpec {
            name: "blob".into(),
            input_shape: [1, 1, 8],
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    n_in: 8,
                    n_out: 32,
                    use_bias: window.is_none(),
                    window,
                    l1_lambda: None,
                },
                LayerSpec::Relu,
                LayerSpec::SoftmaxOutput { n_classes: 4 },
            ],
        }
    }

    #[test]
    fn zero_epochs_no_records() {
        let data = synthetic_blobs(64, 4, 8, 1).unwrap();
        let mut net = Network::<f32>::new(&blob_net(None), Regime::Developmental, 1).unwrap();
        let before = net.clone();
        let recs = fit(
            &mut net,
            &data,
            Some(&data),
            &TrainConfig::new(0, Optimizer::adam(1e-3), 1),
        )
        .unwrap();
        assert!(recs.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn fit_emits_train_and_val_per_epoch() {
        let data = synthetic_blobs(256, 4, 8, 1).unwrap();
        let mut net = Network::<f32>::new(&blob_net(None), Regime::Developmental, 1).unwrap();
        let recs = fit(
            &mut net,
            &data,
            Some(&data),
            &TrainConfig::new(3, Optimizer::adam(1e-2), 1),
        )
        .unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs.iter().filter(|r| r.split == Split::Val).count(), 3);
        assert!(recs.last().unwrap().error_pct < 5.0, "{recs:?}");
    }

    #[test]
    fn evaluate_is_pure_and_repeatable() {
        let data = synthetic_blobs(200, 4, 8, 2).unwrap();
        let spec = blob_net(Some(WindowSpec::full()));
        let mut net = Network::<f32>::new(&spec, Regime::Disorganized, 3).unwrap();
        fit(&mut net, &data, None, &TrainConfig::new(2, Optimizer::adam(1e-2), 3)).unwrap();
        let snapshot = net.clone();
        let full = net.window_override(&WindowSpec::full()).unwrap();
        let heavy = net
            .window_override(&WindowSpec::new(WindowKind::Diagonal, 0.9))
            .unwrap();
        let a = evaluate(&net, &data, Some(&full)).unwrap();
        let _ = evaluate(&net, &data, Some(&heavy)).unwrap();
        let b = evaluate(&net, &data, Some(&full)).unwrap();
        assert_eq!(a, b);
        assert_eq!(net, snapshot);
    }

    #[test]
    fn non_finite_loss_is_error() {
        let data = synthetic_blobs(64, 4, 8, 1).unwrap();
        let mut net = Network::<f32>::new(&blob_net(None), Regime::Developmental, 1).unwrap();
        net.params_mut()[0].value.data_mut()[0] = f32::INFINITY;
        let recs = fit(&mut net, &data, None, &TrainConfig::new(3, Optimizer::adam(1e-3), 1));
        assert!(matches!(recs, Err(Error::NonFiniteLoss { .. })), "{recs:?}");
    }
}
