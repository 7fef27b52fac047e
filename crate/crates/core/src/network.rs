//! Layer stacks: declarative specs, the preset networks, and the runtime
//! [`Network`] that owns layer state.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::layers::{glorot_uniform, he_init, Conv2d, Dense, Dropout, Flatten, Layer, MaxPool2x2, Param, Relu};
use crate::rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::train::Regime;
use crate::window::{build_window, WindowMatrix, WindowSpec};

use crate::tensor::Padding;

#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Dense {
        n_in: usize,
        n_out: usize,
        use_bias: bool,
        window: Option<WindowSpec>,
        l1_lambda: Option<f64>,
    },
    Conv2D {
        kh: usize,
        kw: usize,
        c_in: usize,
        c_out: usize,
        padding: Padding,
        window: Option<WindowSpec>,
    },
    MaxPool2x2,
    Dropout {
        rate: f64,
    },
    Relu,
    Flatten,
    /// Dense layer producing class logits; softmax is folded into the loss.
    SoftmaxOutput {
        n_classes: usize,
    },
}

impl LayerSpec {
    pub fn dense(n_in: usize, n_out: usize) -> Self {
        LayerSpec::Dense {
            n_in,
            n_out,
            use_bias: true,
            window: None,
            l1_lambda: None,
        }
    }

    pub fn conv(c_in: usize, c_out: usize, padding: Padding) -> Self {
        LayerSpec::Conv2D {
            kh: 3,
            kw: 3,
            c_in,
            c_out,
            padding,
            window: None,
        }
    }

    pub fn window(&self) -> Option<&WindowSpec> {
        match self {
            LayerSpec::Dense { window, .. } | LayerSpec::Conv2D { window, .. } => window.as_ref(),
            _ => None,
        }
    }
}

/// Input shape (`h × w × c`) plus an ordered layer list.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: [usize; 3],
    pub layers: Vec<LayerSpec>,
}

/// Per-sample shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flow {
    Image([usize; 3]),
    Flat(usize),
}

impl Flow {
    fn dims(self) -> Vec<usize> {
        match self {
            Flow::Image(s) => s.to_vec(),
            Flow::Flat(n) => vec![n],
        }
    }
}

fn next_flow(flow: Flow, layer: &LayerSpec) -> Result<Flow> {
    Ok(match (layer, flow) {
        (LayerSpec::Dense { n_in, n_out, .. }, Flow::Flat(n)) if *n_in == n => Flow::Flat(*n_out),
        (LayerSpec::SoftmaxOutput { n_classes }, Flow::Flat(_)) => Flow::Flat(*n_classes),
        (
            LayerSpec::Conv2D {
                kh,
                kw,
                c_in,
                c_out,
                padding,
                ..
            },
            Flow::Image([h, w, c]),
        ) if *c_in == c => match padding {
            Padding::Zero => Flow::Image([h, w, *c_out]),
            Padding::None if *kh <= h && *kw <= w => Flow::Image([h - kh + 1, w - kw + 1, *c_out]),
            Padding::None => return Err(Error::InvalidLayer("kernel larger than input")),
        },
        (LayerSpec::MaxPool2x2, Flow::Image([h, w, c])) if h >= 2 && w >= 2 => Flow::Image([h / 2, w / 2, c]),
        (LayerSpec::Flatten, Flow::Image([h, w, c])) => Flow::Flat(h * w * c),
        (LayerSpec::Flatten, Flow::Flat(n)) => Flow::Flat(n),
        (LayerSpec::Dropout { .. } | LayerSpec::Relu, f) => f,
        (_, f) => {
            return Err(Error::ShapeMismatch {
                expected: layer_input_hint(layer),
                got: f.dims(),
            })
        }
    })
}

fn layer_input_hint(layer: &LayerSpec) -> Vec<usize> {
    match layer {
        LayerSpec::Dense { n_in, .. } => vec![*n_in],
        LayerSpec::Conv2D { c_in, .. } => vec![0, 0, *c_in],
        _ => Vec::new(),
    }
}

impl NetworkSpec {
    /// Output width of the last layer after validating the whole stack.
    pub fn output_classes(&self) -> Result<usize> {
        let mut flow = Flow::Image(self.input_shape);
        for layer in &self.layers {
            flow = next_flow(flow, layer)?;
        }
        match flow {
            Flow::Flat(n) => Ok(n),
            Flow::Image(_) => Err(Error::InvalidLayer("network must end in a flat layer")),
        }
    }

    /// Trainable parameters per layer, before any window is applied.
    pub fn layer_param_counts(&self) -> Result<Vec<usize>> {
        let mut flow = Flow::Image(self.input_shape);
        let mut counts = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let count = match (layer, flow) {
                (
                    LayerSpec::Dense {
                        n_in, n_out, use_bias, ..
                    },
                    _,
                ) => n_in * n_out + if *use_bias { *n_out } else { 0 },
                (LayerSpec::SoftmaxOutput { n_classes }, Flow::Flat(n)) => n * n_classes + n_classes,
                (
                    LayerSpec::Conv2D {
                        kh, kw, c_in, c_out, ..
                    },
                    _,
                ) => kh * kw * c_in * c_out + c_out,
                _ => 0,
            };
            counts.push(count);
            flow = next_flow(flow, layer)?;
        }
        Ok(counts)
    }

    pub fn param_count(&self) -> Result<usize> {
        Ok(self.layer_param_counts()?.iter().sum())
    }

    /// Network A: `Input(28×28) – Sz(512) – Output(10)`.
    pub fn network_a(window: Option<WindowSpec>) -> Self {
        Self::network_a_sized(28, 28, window)
    }

    /// Network A on a smaller square input, e.g. 8×8 for gradient checks.
    pub fn network_a_sized(h: usize, w: usize, window: Option<WindowSpec>) -> Self {
        Self {
            name: "A".into(),
            input_shape: [h, w, 1],
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    n_in: h * w,
                    n_out: 512,
                    use_bias: true,
                    window,
                    l1_lambda: None,
                },
                LayerSpec::Relu,
                LayerSpec::SoftmaxOutput { n_classes: 10 },
            ],
        }
    }

    /// Network B: `Input(28×28) – FC(h) – FC>Sz(h) – Output(10)`; the second
    /// hidden layer has no bias and carries the evaluation window.
    pub fn network_b(hidden: usize, window: Option<WindowSpec>) -> Self {
        Self {
            name: "B".into(),
            input_shape: [28, 28, 1],
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::dense(784, hidden),
                LayerSpec::Relu,
                LayerSpec::Dense {
                    n_in: hidden,
                    n_out: hidden,
                    use_bias: false,
                    window,
                    l1_lambda: None,
                },
                LayerSpec::Relu,
                LayerSpec::SoftmaxOutput { n_classes: 10 },
            ],
        }
    }

    fn cifar_trunk() -> Vec<LayerSpec> {
        vec![
            LayerSpec::conv(3, 32, Padding::Zero),
            LayerSpec::Relu,
            LayerSpec::conv(32, 32, Padding::None),
            LayerSpec::Relu,
            LayerSpec::MaxPool2x2,
            LayerSpec::Dropout { rate: 0.25 },
            LayerSpec::conv(32, 64, Padding::Zero),
            LayerSpec::Relu,
            LayerSpec::conv(64, 64, Padding::None),
            LayerSpec::Relu,
            LayerSpec::MaxPool2x2,
            LayerSpec::Dropout { rate: 0.25 },
            LayerSpec::Flatten,
        ]
    }

    /// Network C: four 3×3 convolutions, then `Sz(512)` (or FC with an
    /// optional L1 penalty) and the output layer.
    pub fn network_c(window: Option<WindowSpec>, l1_lambda: Option<f64>) -> Self {
        let mut layers = Self::cifar_trunk();
        layers.extend([
            LayerSpec::Dense {
                n_in: 2304,
                n_out: 512,
                use_bias: true,
                window,
                l1_lambda,
            },
            LayerSpec::Relu,
            LayerSpec::SoftmaxOutput { n_classes: 10 },
        ]);
        Self {
            name: "C".into(),
            input_shape: [32, 32, 3],
            layers,
        }
    }

    /// Network D: the network C trunk with a bias-free `FC>Sz(512)` top layer.
    pub fn network_d(window: Option<WindowSpec>) -> Self {
        let mut layers = Self::cifar_trunk();
        layers.extend([
            LayerSpec::Dense {
                n_in: 2304,
                n_out: 512,
                use_bias: false,
                window,
                l1_lambda: None,
            },
            LayerSpec::Relu,
            LayerSpec::SoftmaxOutput { n_classes: 10 },
        ]);
        Self {
            name: "D".into(),
            input_shape: [32, 32, 3],
            layers,
        }
    }

    /// Small CNN whose first layer is a windowed 3→64 convolution, used to
    /// inspect channel-wise first-layer filters.
    pub fn toy_cnn(window: Option<WindowSpec>) -> Self {
        Self {
            name: "toy-cnn".into(),
            input_shape: [32, 32, 3],
            layers: vec![
                LayerSpec::Conv2D {
                    kh: 3,
                    kw: 3,
                    c_in: 3,
                    c_out: 64,
                    padding: Padding::Zero,
                    window,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2x2,
                LayerSpec::MaxPool2x2,
                LayerSpec::Flatten,
                LayerSpec::SoftmaxOutput { n_classes: 10 },
            ],
        }
    }
}

/// Window masks for one evaluation, keyed by layer index.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOverride<T> {
    masks: Vec<(usize, Vec<T>)>,
    windows: Vec<WindowMatrix>,
}

impl<T: Scalar> WindowOverride<T> {
    pub fn windows(&self) -> &[WindowMatrix] {
        &self.windows
    }

    fn mask_for(&self, layer: usize) -> Option<&[T]> {
        self.masks
            .iter()
            .find(|(ix, _)| *ix == layer)
            .map(|(_, m)| m.as_slice())
    }
}

/// A constructed layer stack owning its parameters and caches.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    spec: NetworkSpec,
    regime: Regime,
    layers: Vec<Layer<T>>,
    n_classes: usize,
}

impl<T: Scalar> Network<T> {
    /// Builds and initializes a network. Hidden dense and conv layers use He
    /// initialization, the output layer Glorot uniform, biases start at zero.
    /// In the developmental regime masked weights start (and stay) at zero.
    pub fn new(spec: &NetworkSpec, regime: Regime, seed: u64) -> Result<Self> {
        let n_classes = spec.output_classes()?;
        let mut init = rng::stream(seed, rng::STREAM_INIT);
        let mut flow = Flow::Image(spec.input_shape);
        let mut layers = Vec::with_capacity(spec.layers.len());
        let train_masked = regime == Regime::Developmental;
        for ls in &spec.layers {
            let layer = match *ls {
                LayerSpec::Dense {
                    n_in,
                    n_out,
                    use_bias,
                    window,
                    l1_lambda,
                } => {
                    if window.is_some() && use_bias && regime == Regime::Disorganized {
                        return Err(Error::InvalidLayer(
                            "windowed dense layers have no bias in the disorganized regime",
                        ));
                    }
                    let w = he_init(&[n_in, n_out], n_in, &mut init)?;
                    let b = use_bias.then(|| Tensor::zeros(&[n_out]));
                    let mut dense = Dense::from_parts(w, b)?;
                    if let Some(ws) = window {
                        dense = dense.with_window(build_window(&ws, n_in, n_out)?, train_masked)?;
                    }
                    if let Some(lambda) = l1_lambda {
                        if lambda.is_nan() || lambda < 0.0 {
                            return Err(Error::InvalidLayer("L1 lambda must be non-negative"));
                        }
                        dense = dense.with_l1(lambda);
                    }
                    Layer::Dense(dense)
                }
                LayerSpec::SoftmaxOutput { n_classes } => {
                    let Flow::Flat(n_in) = flow else {
                        return Err(Error::InvalidLayer("output layer needs flat input"));
                    };
                    let w = glorot_uniform(&[n_in, n_classes], n_in, n_classes, &mut init)?;
                    Layer::Dense(Dense::from_parts(w, Some(Tensor::zeros(&[n_classes])))?)
                }
                LayerSpec::Conv2D {
                    kh,
                    kw,
                    c_in,
                    c_out,
                    padding,
                    window,
                } => {
                    let k = he_init(&[kh, kw, c_in, c_out], kh * kw * c_in, &mut init)?;
                    let mut conv = Conv2d::from_parts(k, Tensor::zeros(&[c_out]), padding)?;
                    if let Some(ws) = window {
                        conv = conv.with_window(build_window(&ws, c_in, c_out)?, train_masked)?;
                    }
                    Layer::Conv2d(conv)
                }
                LayerSpec::MaxPool2x2 => Layer::MaxPool2x2(MaxPool2x2::new()),
                LayerSpec::Dropout { rate } => Layer::Dropout(Dropout::new(rate)?),
                LayerSpec::Relu => Layer::Relu(Relu::new()),
                LayerSpec::Flatten => Layer::Flatten(Flatten::new()),
            };
            flow = next_flow(flow, ls)?;
            layers.push(layer);
        }
        Ok(Self {
            spec: spec.clone(),
            regime,
            layers,
            n_classes,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.spec.input_shape
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// Indices and `(n_x, n_y)` window shapes of the window-target layers.
    pub fn window_targets(&self) -> Vec<(usize, (usize, usize))> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| l.window_shape().map(|s| (i, s)))
            .collect()
    }

    /// Builds `spec` for every window-target layer, for use with [`Network::infer`].
    pub fn window_override(&self, spec: &WindowSpec) -> Result<WindowOverride<T>> {
        let mut masks = Vec::new();
        let mut windows = Vec::new();
        for (ix, (n_x, n_y)) in self.window_targets() {
            let window = build_window(spec, n_x, n_y)?;
            masks.push((ix, window.scaled_mask()?));
            windows.push(window);
        }
        Ok(WindowOverride { masks, windows })
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let [h, w, c] = self.spec.input_shape;
        match x.shape() {
            &[_, xh, xw, xc] if (xh, xw, xc) == (h, w, c) => Ok(()),
            s => Err(Error::ShapeMismatch {
                expected: vec![s.first().copied().unwrap_or(0), h, w, c],
                got: s.to_vec(),
            }),
        }
    }

    /// Training forward pass over an `n × h × w × c` batch, returning logits.
    pub fn forward(&mut self, x: Tensor<T>, mut rng: Option<&mut dyn RngCore>) -> Result<Tensor<T>> {
        self.check_input(&x)?;
        let mut act = x;
        for layer in &mut self.layers {
            act = match rng {
                Some(ref mut r) => layer.forward(act, Some(&mut **r))?,
                None => layer.forward(act, None)?,
            };
        }
        Ok(act)
    }

    /// Backpropagates logits gradients. Layers below the first parameterized
    /// layer are only visited when `need_input_grad` is set.
    pub fn backward(&mut self, grad_logits: Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let first_param = self.layers.iter().position(|l| l.param_count() > 0).unwrap_or(0);
        let mut grad = grad_logits;
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            if !need_input_grad && i == first_param {
                layer.backward(grad, false)?;
                return Ok(None);
            }
            grad = layer.backward(grad, true)?.ok_or(Error::MissingCache)?;
        }
        Ok(Some(grad))
    }

    /// Cache-free evaluation pass. Window-target layers use their own window
    /// unless `window` overrides it.
    pub fn infer(&self, x: Tensor<T>, window: Option<&WindowOverride<T>>) -> Result<Tensor<T>> {
        self.check_input(&x)?;
        let mut act = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let mask = window.and_then(|w| w.mask_for(i));
            act = layer.infer(act, mask)?;
        }
        Ok(act)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::window::WindowKind;

    #[test]
    fn network_a_counts() {
        let spec = NetworkSpec::network_a(None);
        let counts: Vec<usize> = spec
            .layer_param_counts()
            .unwrap()
            .into_iter()
            .filter(|&c| c > 0)
            .collect();
        assert_eq!(counts, vec![401_920, 5_130]);
    }

    #[test]
    fn network_b_counts() {
        for (hidden, fc, sz, out) in [(64, 50_240, 4_096, 650), (1024, 803_840, 1_048_576, 10_250)] {
            let spec = NetworkSpec::network_b(hidden, None);
            let counts: Vec<usize> = spec
                .layer_param_counts()
                .unwrap()
                .into_iter()
                .filter(|&c| c > 0)
                .collect();
            assert_eq!(counts, vec![fc, sz, out]);
        }
    }

    #[test]
    fn cifar_counts() {
        let c: Vec<usize> = NetworkSpec::network_c(None, None)
            .layer_param_counts()
            .unwrap()
            .into_iter()
            .filter(|&c| c > 0)
            .collect();
        assert_eq!(c, vec![896, 9_248, 18_496, 36_928, 1_180_160, 5_130]);
        let d: Vec<usize> = NetworkSpec::network_d(None)
            .layer_param_counts()
            .unwrap()
            .into_iter()
            .filter(|&c| c > 0)
            .collect();
        assert_eq!(d, vec![896, 9_248, 18_496, 36_928, 1_179_648, 5_130]);
    }

    #[test]
    fn built_network_matches_spec_count() {
        let spec = NetworkSpec::network_b(64, Some(WindowSpec::new(WindowKind::Diagonal, 0.5)));
        let net = Network::<f32>::new(&spec, Regime::Disorganized, 1).unwrap();
        assert_eq!(net.param_count(), spec.param_count().unwrap());
        assert_eq!(net.window_targets(), vec![(3, (64, 64))]);
    }

    #[test]
    fn disorganized_window_layer_needs_no_bias() {
        let mut spec = NetworkSpec::network_a(Some(WindowSpec::new(WindowKind::Diagonal, 0.5)));
        assert!(Network::<f32>::new(&spec, Regime::Disorganized, 1).is_err());
        assert!(Network::<f32>::new(&spec, Regime::Developmental, 1).is_ok());
        spec.layers[1] = LayerSpec::Dense {
            n_in: 784,
            n_out: 512,
            use_bias: false,
            window: Some(WindowSpec::new(WindowKind::Diagonal, 0.5)),
            l1_lambda: None,
        };
        assert!(Network::<f32>::new(&spec, Regime::Disorganized, 1).is_ok());
    }

    #[test]
    fn bad_stack_is_rejected() {
        let spec = NetworkSpec {
            name: "bad".into(),
            input_shape: [4, 4, 1],
            layers: vec![LayerSpec::dense(16, 4)],
        };
        assert!(spec.output_classes().is_err());
    }

    #[test]
    fn same_seed_same_weights() {
        let spec = NetworkSpec::network_a_sized(8, 8, None);
        let a = Network::<f32>::new(&spec, Regime::Developmental, 5).unwrap();
        let b = Network::<f32>::new(&spec, Regime::Developmental, 5).unwrap();
        let c = Network::<f32>::new(&spec, Regime::Developmental, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
