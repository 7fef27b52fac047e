//! Central-difference gradient checks for whole networks.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::softmax_crossentropy;
use crate::network::Network;
use crate::rng;
use crate::tensor::Tensor;
use crate::train::{add_l1_gradients, network_l1};

/// Options for [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    /// Seeds a fresh dropout stream for every forward pass, so each pass sees
    /// the same masks. `None` disables dropout.
    pub dropout_seed: Option<u64>,
    /// Elements checked per parameter tensor, spread evenly; 0 checks all.
    pub max_per_param: usize,
    /// Floor on the denominator of the relative error.
    pub rel_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            dropout_seed: Some(0),
            max_per_param: 0,
            rel_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// `(parameter index, element index)` of the largest relative error.
    pub worst: (usize, usize),
}

fn loss_at(
    net: &mut Network<f64>,
    x: &Tensor<f64>,
    labels: &[usize],
    cfg: &GradCheckConfig,
) -> Result<(f64, Tensor<f64>)> {
    let logits = match cfg.dropout_seed {
        Some(seed) => {
            let mut r = rng::stream(seed, rng::STREAM_TRAIN);
            net.forward(x.clone(), Some(&mut r))?
        }
        None => net.forward(x.clone(), None)?,
    };
    let (ce, grad) = softmax_crossentropy(&logits, labels)?;
    Ok((ce + network_l1(net), grad))
}

/// Compares backprop gradients of the loss (cross-entropy plus L1 terms)
/// against central differences with step `h = 1e-5 · max(1, |w|)`.
/// Relative error is `|a − n| / max(|a|, |n|, rel_floor)`.
pub fn gradient_check(
    net: &mut Network<f64>,
    x: &Tensor<f64>,
    labels: &[usize],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    let (_, grad) = loss_at(net, x, labels, cfg)?;
    net.backward(grad, false)?;
    add_l1_gradients(net);
    let analytic: Vec<Vec<f64>> = net.params().iter().map(|p| p.grad.clone()).collect();
    if analytic.is_empty() {
        return Err(Error::InvalidArgument("network has no parameters"));
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        checked: 0,
        worst: (0, 0),
    };
    for (pi, grads) in analytic.iter().enumerate() {
        let len = grads.len();
        let stride = match cfg.max_per_param {
            0 => 1,
            m => len.div_ceil(m).max(1),
        };
        for ei in (0..len).step_by(stride) {
            let w0 = net.params()[pi].value.data()[ei];
            let h = 1e-5 * w0.abs().max(1.0);
            net.params_mut()[pi].value.data_mut()[ei] = w0 + h;
            let (plus, _) = loss_at(net, x, labels, cfg)?;
            net.params_mut()[pi].value.data_mut()[ei] = w0 - h;
            let (minus, _) = loss_at(net, x, labels, cfg)?;
            net.params_mut()[pi].value.data_mut()[ei] = w0;

            let numeric = (plus - minus) / (2.0 * h);
            let a = grads[ei];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(cfg.rel_floor);
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (pi, ei);
            }
        }
    }
    Ok(report)
}
