//! Central finite-difference checks of the analytic gradients.
//!
//! Every check builds random inputs from a seed and returns the worst relative
//! error `|g_analytic - g_fd| / max(|g_fd|, 1e-8)` over all checked tensors.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::layers::{self, Padding};
use super::network::{init, LayerSpec, NetworkSpec};
use super::tensor::Tensor;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / norm.max(1e-8)
}

/// Central differences of `f` with respect to every element of `x`.
pub fn numeric_gradient(x: &Tensor, mut f: impl FnMut(&Tensor) -> Result<f64>) -> Result<Vec<f64>> {
    let mut probe = x.clone();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + FD_STEP;
        let up = f(&probe)?;
        probe.data_mut()[i] = orig - FD_STEP;
        let down = f(&probe)?;
        probe.data_mut()[i] = orig;
        out.push((up - down) / (2.0 * FD_STEP));
    }
    Ok(out)
}

fn gaussian(shape: &[usize], std: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let normal = Normal::new(0.0, std).expect("positive std");
    Tensor::new(shape.to_vec(), (0..n).map(|_| normal.sample(rng)).collect()).expect("valid shape")
}

/// Distinct values at least 0.05 apart and never within 0.025 of zero, so that
/// no finite-difference probe crosses a ReLU kink or flips a pooling argmax.
fn separated(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    let n: usize = shape.iter().product();
    let mut ranks: Vec<usize> = (0..n).collect();
    ranks.shuffle(rng);
    let half = n as f64 / 2.0;
    let data = ranks.into_iter().map(|r| (r as f64 - half + 0.5) * 0.05).collect();
    Tensor::new(shape.to_vec(), data).expect("valid shape")
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Convolution (same and valid padding) gradients for input, weights and bias.
pub fn check_conv(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for padding in [Padding::Same, Padding::Valid] {
        let x = gaussian(&[2, 7, 6], 1.0, &mut rng);
        let w = gaussian(&[3, 2, 3, 3], 0.5, &mut rng);
        let b = gaussian(&[3], 0.5, &mut rng);
        let y = layers::conv_forward(&x, &w, &b, padding)?;
        let r = gaussian(y.shape(), 1.0, &mut rng);
        let (gx, gw, gb) = layers::conv_backward(&x, &w, &b, padding, &r)?;
        let fx = numeric_gradient(&x, |x| Ok(dot(&layers::conv_forward(x, &w, &b, padding)?, &r)))?;
        let fw = numeric_gradient(&w, |w| Ok(dot(&layers::conv_forward(&x, w, &b, padding)?, &r)))?;
        let fb = numeric_gradient(&b, |b| Ok(dot(&layers::conv_forward(&x, &w, b, padding)?, &r)))?;
        worst = worst
            .max(relative_error(gx.data(), &fx))
            .max(relative_error(gw.data(), &fw))
            .max(relative_error(gb.data(), &fb));
    }
    Ok(worst)
}

/// ReLU followed by overlapping max pooling, gradient with respect to the input.
pub fn check_pool_relu(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = separated(&[2, 9, 8], &mut rng);
    let forward = |x: &Tensor| -> Result<Tensor> { Ok(layers::maxpool_overlap(&layers::relu(x), 3, 2)?.0) };
    let y = forward(&x)?;
    let r = gaussian(y.shape(), 1.0, &mut rng);
    let a = layers::relu(&x);
    let (_, arg) = layers::maxpool_overlap(&a, 3, 2)?;
    let ga = layers::maxpool_backward(a.shape(), &arg, &r)?;
    let gx = layers::relu_backward(&x, &ga)?;
    let fx = numeric_gradient(&x, |x| Ok(dot(&forward(x)?, &r)))?;
    Ok(relative_error(gx.data(), &fx))
}

/// Fully connected layer into softmax cross-entropy.
pub fn check_fc_softmax(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian(&[7], 1.0, &mut rng);
    let w = gaussian(&[4, 7], 0.5, &mut rng);
    let b = gaussian(&[4], 0.5, &mut rng);
    let label = (seed % 4) as usize;
    let loss = |x: &Tensor, w: &Tensor, b: &Tensor| -> Result<f64> {
        Ok(layers::cross_entropy(layers::fc_forward(x, w, b)?.data(), label)?.0)
    };
    let logits = layers::fc_forward(&x, &w, &b)?;
    let (_, gl) = layers::cross_entropy(logits.data(), label)?;
    let (gx, gw, gb) = layers::fc_backward(&x, &w, &Tensor::from_vec(gl))?;
    let fx = numeric_gradient(&x, |x| loss(x, &w, &b))?;
    let fw = numeric_gradient(&w, |w| loss(&x, w, &b))?;
    let fb = numeric_gradient(&b, |b| loss(&x, &w, b))?;
    Ok(relative_error(gx.data(), &fx)
        .max(relative_error(gw.data(), &fw))
        .max(relative_error(gb.data(), &fb)))
}

/// Softmax cross-entropy gradient with respect to the logits.
pub fn check_loss(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = gaussian(&[4], 2.0, &mut rng);
    let label = (seed % 4) as usize;
    let (_, g) = layers::cross_entropy(z.data(), label)?;
    let fd = numeric_gradient(&z, |z| Ok(layers::cross_entropy(z.data(), label)?.0))?;
    Ok(relative_error(&g, &fd))
}

/// conv -> pool -> ReLU -> flatten -> FC -> softmax through the full network
/// backward pass, for every parameter and the input.
pub fn check_composite(seed: u64) -> Result<f64> {
    let spec = NetworkSpec {
        layers: vec![
            LayerSpec::Conv { in_maps: 2, out_maps: 3, kernel: 3, padding: Padding::Same },
            LayerSpec::MaxPool { p: 3, s: 2 },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::FullyConnected { inputs: 3 * 3 * 3, outputs: 4 },
            LayerSpec::Softmax,
        ],
        input_shape: [2, 7, 7],
        n_classes: 4,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = init(&spec, seed)?;
    for p in state.params.iter_mut().flatten() {
        p.weight.value = gaussian(p.weight.value.shape(), 0.5, &mut rng);
        p.bias.value = gaussian(p.bias.value.shape(), 0.1, &mut rng);
    }
    let x = gaussian(&[2, 7, 7], 1.0, &mut rng);
    let label = (seed % 4) as usize;
    let (_, grads, gx) = state.backward(&x, label)?;

    let loss_of = |s: &super::network::ModelState, x: &Tensor| -> Result<f64> {
        Ok(layers::cross_entropy(&s.logits(x)?, label)?.0)
    };
    let mut worst = relative_error(gx.data(), &numeric_gradient(&x, |x| loss_of(&state, x))?);
    for i in 0..state.params.len() {
        let Some((gw, gb)) = grads.layers[i].clone() else { continue };
        for (k, analytic) in [gw, gb].iter().enumerate() {
            let base = state.clone();
            let current = {
                let p = base.params[i].as_ref().expect("parameterised layer");
                if k == 0 { p.weight.value.clone() } else { p.bias.value.clone() }
            };
            let fd = numeric_gradient(&current, |t| {
                let mut s = base.clone();
                let p = s.params[i].as_mut().expect("parameterised layer");
                if k == 0 {
                    p.weight.value = t.clone();
                } else {
                    p.bias.value = t.clone();
                }
                loss_of(&s, &x)
            })?;
            worst = worst.max(relative_error(analytic.data(), &fd));
        }
    }
    Ok(worst)
}
