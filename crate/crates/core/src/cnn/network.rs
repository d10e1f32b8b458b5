//! Declarative network description, parameters, forward pass and backpropagation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{self, Padding};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Standard deviation of the zero-mean Gaussian weight initialisation.
pub const INIT_WEIGHT_STD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv { in_maps: usize, out_maps: usize, kernel: usize, padding: Padding },
    Relu,
    MaxPool { p: usize, s: usize },
    Flatten,
    FullyConnected { inputs: usize, outputs: usize },
    Softmax,
}

impl LayerSpec {
    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::FullyConnected { .. })
    }

    /// `(weight shape, bias shape)` for parameterised layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match *self {
            LayerSpec::Conv { in_maps, out_maps, kernel, .. } => {
                Some((vec![out_maps, in_maps, kernel, kernel], vec![out_maps]))
            }
            LayerSpec::FullyConnected { inputs, outputs } => Some((vec![outputs, inputs], vec![outputs])),
            _ => None,
        }
    }
}

/// Which pre-built architecture to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Conv/pool x2 with 8 and 16 maps, then two fully connected layers.
    Desk,
    /// Conv/pool x4 with 64 maps each, then two fully connected layers.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    /// `(channels, rows, cols)`.
    pub input_shape: [usize; 3],
    pub n_classes: usize,
}

const POOL_P: usize = 3;
const POOL_S: usize = 2;
const KERNEL: usize = 5;

impl NetworkSpec {
    pub fn profile(profile: Profile, input_shape: [usize; 3], n_classes: usize) -> Result<Self> {
        let (maps, hidden): (&[usize], usize) = match profile {
            Profile::Desk => (&[8, 16], 64),
            Profile::Full => (&[64, 64, 64, 64], 128),
        };
        let [c, mut h, mut w] = input_shape;
        let mut layers = Vec::new();
        let mut in_maps = c;
        for &out_maps in maps {
            layers.push(LayerSpec::Conv { in_maps, out_maps, kernel: KERNEL, padding: Padding::Same });
            layers.push(LayerSpec::Relu);
            layers.push(LayerSpec::MaxPool { p: POOL_P, s: POOL_S });
            h = layers::pool_output_len(h, POOL_P, POOL_S)?;
            w = layers::pool_output_len(w, POOL_P, POOL_S)?;
            in_maps = out_maps;
        }
        layers.push(LayerSpec::Flatten);
        layers.push(LayerSpec::FullyConnected { inputs: in_maps * h * w, outputs: hidden });
        layers.push(LayerSpec::Relu);
        layers.push(LayerSpec::FullyConnected { inputs: hidden, outputs: n_classes });
        layers.push(LayerSpec::Softmax);
        let spec = NetworkSpec { layers, input_shape, n_classes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn desk(input_shape: [usize; 3]) -> Result<Self> {
        Self::profile(Profile::Desk, input_shape, 4)
    }

    pub fn full(input_shape: [usize; 3]) -> Result<Self> {
        Self::profile(Profile::Full, input_shape, 4)
    }

    /// Shapes of every intermediate activation, starting with the input.
    pub fn shapes(&self) -> Result<Vec<Vec<usize>>> {
        let mut shapes = vec![self.input_shape.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let cur = shapes.last().unwrap().clone();
            let bad = |msg: String| Error::shape(format!("layer {i}: {msg}"));
            let next = match *layer {
                LayerSpec::Conv { in_maps, out_maps, kernel, padding } => {
                    if kernel % 2 == 0 {
                        return Err(bad(format!("kernel {kernel} must be odd")));
                    }
                    match cur[..] {
                        [c, h, w] if c == in_maps => {
                            let (oh, ow) = layers::conv_output_dims(h, w, kernel, padding).map_err(|e| bad(e.to_string()))?;
                            vec![out_maps, oh, ow]
                        }
                        _ => return Err(bad(format!("conv expects {in_maps} maps, input is {cur:?}"))),
                    }
                }
                LayerSpec::Relu => cur,
                LayerSpec::MaxPool { p, s } => match cur[..] {
                    [c, h, w] => vec![
                        c,
                        layers::pool_output_len(h, p, s).map_err(|e| bad(e.to_string()))?,
                        layers::pool_output_len(w, p, s).map_err(|e| bad(e.to_string()))?,
                    ],
                    _ => return Err(bad(format!("pooling needs a 3-D input, got {cur:?}"))),
                },
                LayerSpec::Flatten => vec![cur.iter().product()],
                LayerSpec::FullyConnected { inputs, outputs } => {
                    if inputs == 0 || outputs == 0 {
                        return Err(bad("fully connected dims must be > 0".into()));
                    }
                    if cur.len() != 1 || cur[0] != inputs {
                        return Err(bad(format!("fc expects [{inputs}], input is {cur:?}")));
                    }
                    vec![outputs]
                }
                LayerSpec::Softmax => {
                    if i + 1 != self.layers.len() {
                        return Err(bad("softmax must be the last layer".into()));
                    }
                    cur
                }
            };
            shapes.push(next);
        }
        Ok(shapes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("input dims must be positive"));
        }
        if self.layers.last() != Some(&LayerSpec::Softmax) {
            return Err(Error::shape("the final layer must be softmax"));
        }
        let shapes = self.shapes()?;
        let out = &shapes[shapes.len() - 1];
        if out[..] != [self.n_classes] {
            return Err(Error::shape(format!("network emits {out:?}, expected [{}]", self.n_classes)));
        }
        Ok(())
    }

    /// Index of the layer whose output feeds the softmax.
    fn logits_layer(&self) -> usize {
        self.layers.len() - 1
    }
}

/// A parameter tensor together with its momentum buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Tensor,
    pub velocity: Tensor,
}

impl Param {
    fn new(value: Tensor) -> Self {
        let velocity = Tensor::zeros(value.shape());
        Param { value, velocity }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Param,
    pub bias: Param,
}

/// Learned weights, momenta and the SGD iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub spec: NetworkSpec,
    /// One entry per layer; `None` for layers without parameters.
    pub params: Vec<Option<LayerParams>>,
    pub iteration: u64,
    pub seed: u64,
}

/// Per-layer `(weight, bias)` gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<(Tensor, Tensor)>>,
}

impl Gradients {
    pub fn zeros_like(state: &ModelState) -> Self {
        Gradients {
            layers: state
                .params
                .iter()
                .map(|p| {
                    p.as_ref()
                        .map(|lp| (Tensor::zeros(lp.weight.value.shape()), Tensor::zeros(lp.bias.value.shape())))
                })
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if let (Some((aw, ab)), Some((bw, bb))) = (a.as_mut(), b.as_ref()) {
                aw.add_scaled(bw, 1.0)?;
                ab.add_scaled(bb, 1.0)?;
            }
        }
        Ok(())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for (w, b) in self.layers.iter().flatten() {
            w.ensure_finite("weight gradient")?;
            b.ensure_finite("bias gradient")?;
        }
        Ok(())
    }
}

/// How fresh parameters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Weights `N(0, 0.005^2)`; biases one in the first and third convolution and
    /// in hidden fully connected layers, zero elsewhere.
    #[default]
    SmallGaussian,
    /// Weights `N(0, 1/fan_in)`, all biases zero.
    FanIn,
}

impl InitScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "small-gaussian" => Ok(InitScheme::SmallGaussian),
            "fan-in" | "fan_in" => Ok(InitScheme::FanIn),
            other => Err(Error::domain(format!("unknown init scheme `{other}` (small-gaussian|fan-in)"))),
        }
    }
}

/// [`InitScheme::SmallGaussian`] initialisation with zeroed momenta.
pub fn init(spec: &NetworkSpec, seed: u64) -> Result<ModelState> {
    init_with(spec, seed, InitScheme::SmallGaussian)
}

pub fn init_with(spec: &NetworkSpec, seed: u64, scheme: InitScheme) -> Result<ModelState> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last_fc = spec
        .layers
        .iter()
        .rposition(|l| matches!(l, LayerSpec::FullyConnected { .. }));
    let mut conv_ordinal = 0;
    let mut params = Vec::with_capacity(spec.layers.len());
    for (i, layer) in spec.layers.iter().enumerate() {
        let Some((wshape, bshape)) = layer.param_shapes() else {
            params.push(None);
            continue;
        };
        let bias_one = match layer {
            LayerSpec::Conv { .. } => {
                conv_ordinal += 1;
                conv_ordinal == 1 || conv_ordinal == 3
            }
            _ => Some(i) != last_fc,
        };
        let n: usize = wshape.iter().product();
        let fan_in = n / wshape[0];
        let (std, bias_one) = match scheme {
            InitScheme::SmallGaussian => (INIT_WEIGHT_STD, bias_one),
            InitScheme::FanIn => ((1.0 / fan_in as f64).sqrt(), false),
        };
        let normal = Normal::new(0.0, std).expect("positive std");
        let weights = Tensor::new(wshape, (0..n).map(|_| normal.sample(&mut rng)).collect())?;
        let bias = Tensor::filled(&bshape, if bias_one { 1.0 } else { 0.0 });
        params.push(Some(LayerParams { weight: Param::new(weights), bias: Param::new(bias) }));
    }
    Ok(ModelState { spec: spec.clone(), params, iteration: 0, seed })
}

/// Activations recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `activations[i]` is the input of layer `i`; the last entry is the logits.
    pub activations: Vec<Tensor>,
    argmax: Vec<Option<Vec<usize>>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("non-empty trace").data()
    }
}

impl ModelState {
    fn layer_params(&self, i: usize) -> Result<&LayerParams> {
        self.params[i]
            .as_ref()
            .ok_or_else(|| Error::shape(format!("layer {i} has no parameters")))
    }

    /// Runs every layer up to (not including) the softmax.
    pub fn forward_trace(&self, input: &Tensor) -> Result<Trace> {
        if input.shape() != self.spec.input_shape {
            return Err(Error::shape(format!(
                "network input must be {:?}, got {:?}",
                self.spec.input_shape,
                input.shape()
            )));
        }
        let stop = self.spec.logits_layer();
        let mut activations = Vec::with_capacity(stop + 1);
        let mut argmax = Vec::with_capacity(stop);
        activations.push(input.clone());
        for (i, layer) in self.spec.layers[..stop].iter().enumerate() {
            let x = activations.last().unwrap();
            let mut arg = None;
            let y = match *layer {
                LayerSpec::Conv { padding, .. } => {
                    let p = self.layer_params(i)?;
                    layers::conv_forward(x, &p.weight.value, &p.bias.value, padding)?
                }
                LayerSpec::Relu => layers::relu(x),
                LayerSpec::MaxPool { p, s } => {
                    let (y, a) = layers::maxpool_overlap(x, p, s)?;
                    arg = Some(a);
                    y
                }
                LayerSpec::Flatten => x.clone().reshape(&[x.len()])?,
                LayerSpec::FullyConnected { .. } => {
                    let p = self.layer_params(i)?;
                    layers::fc_forward(x, &p.weight.value, &p.bias.value)?
                }
                LayerSpec::Softmax => unreachable!("softmax is handled by the loss"),
            };
            y.ensure_finite("activation")?;
            activations.push(y);
            argmax.push(arg);
        }
        Ok(Trace { activations, argmax })
    }

    pub fn logits(&self, input: &Tensor) -> Result<Vec<f64>> {
        Ok(self.forward_trace(input)?.logits().to_vec())
    }

    /// Backpropagates `grad_logits` through a recorded trace. Returns parameter
    /// gradients and the gradient with respect to the network input.
    pub fn backward_from(&self, trace: &Trace, grad_logits: &[f64]) -> Result<(Gradients, Tensor)> {
        let stop = self.spec.logits_layer();
        let mut grads = Gradients { layers: vec![None; self.spec.layers.len()] };
        let mut g = Tensor::new(vec![grad_logits.len()], grad_logits.to_vec())?;
        for i in (0..stop).rev() {
            let x = &trace.activations[i];
            g = match self.spec.layers[i] {
                LayerSpec::Conv { padding, .. } => {
                    let p = self.layer_params(i)?;
                    let (gx, gw, gb) = layers::conv_backward(x, &p.weight.value, &p.bias.value, padding, &g)?;
                    grads.layers[i] = Some((gw, gb));
                    gx
                }
                LayerSpec::Relu => layers::relu_backward(x, &g)?,
                LayerSpec::MaxPool { .. } => {
                    let arg = trace.argmax[i].as_ref().expect("pool layers record argmax");
                    layers::maxpool_backward(x.shape(), arg, &g)?
                }
                LayerSpec::Flatten => g.reshape(x.shape())?,
                LayerSpec::FullyConnected { .. } => {
                    let p = self.layer_params(i)?;
                    let (gx, gw, gb) = layers::fc_backward(x, &p.weight.value, &g)?;
                    grads.layers[i] = Some((gw, gb));
                    gx
                }
                LayerSpec::Softmax => unreachable!(),
            };
        }
        Ok((grads, g))
    }

    /// Cross-entropy loss of one labelled input with exact gradients for every
    /// parameter and for the input.
    pub fn backward(&self, input: &Tensor, label: usize) -> Result<(f64, Gradients, Tensor)> {
        let trace = self.forward_trace(input)?;
        let (loss, grad) = layers::cross_entropy(trace.logits(), label)?;
        let (grads, gx) = self.backward_from(&trace, &grad)?;
        grads.ensure_finite()?;
        Ok((loss, grads, gx))
    }

    /// Class index and class probabilities.
    pub fn predict(&self, input: &Tensor) -> Result<(usize, Vec<f64>)> {
        let probs = layers::softmax(&self.logits(input)?);
        Ok((argmax(&probs), probs))
    }

    /// Every `(weight, bias)` pair in layer order.
    pub fn param_layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.params.iter().flatten()
    }

    pub fn param_count(&self) -> usize {
        self.param_layers().map(|p| p.weight.value.len() + p.bias.value.len()).sum()
    }
}

/// Index of the largest value; earliest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
