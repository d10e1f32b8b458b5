//! Forward and backward kernels for each layer type.
//!
//! Feature maps are `[channels, rows, cols]`. Convolution is cross-correlation
//! (the kernel is not flipped): `out[o, y, x] = b[o] + sum_{c, i, j}
//! w[o, c, i, j] * in[c, y + i - pad, x + j - pad]`.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Zero-pad by `(k - 1) / 2` so rows and columns are preserved.
    Same,
    Valid,
}

impl Padding {
    pub fn amount(self, kernel: usize) -> usize {
        match self {
            Padding::Same => (kernel - 1) / 2,
            Padding::Valid => 0,
        }
    }
}

fn dims3(t: &Tensor, what: &str) -> Result<(usize, usize, usize)> {
    match *t.shape() {
        [c, h, w] => Ok((c, h, w)),
        ref s => Err(Error::shape(format!("{what} must be [channels, rows, cols], got {s:?}"))),
    }
}

/// Output rows/cols of a convolution.
pub fn conv_output_dims(rows: usize, cols: usize, kernel: usize, padding: Padding) -> Result<(usize, usize)> {
    let pad = padding.amount(kernel);
    if rows + 2 * pad < kernel || cols + 2 * pad < kernel {
        return Err(Error::shape(format!("{kernel}x{kernel} kernel does not fit a {rows}x{cols} input")));
    }
    Ok((rows + 2 * pad - kernel + 1, cols + 2 * pad - kernel + 1))
}

struct ConvGeometry {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    k: usize,
    pad: usize,
    oh: usize,
    ow: usize,
}

impl ConvGeometry {
    fn new(input: &Tensor, weights: &Tensor, bias: &Tensor, padding: Padding) -> Result<Self> {
        let (c_in, h, w) = dims3(input, "conv input")?;
        let (c_out, wc, k) = match *weights.shape() {
            [o, c, kh, kw] if kh == kw => (o, c, kh),
            ref s => return Err(Error::shape(format!("conv weights must be [out, in, k, k], got {s:?}"))),
        };
        if wc != c_in {
            return Err(Error::shape(format!("conv expects {wc} input maps, got {c_in}")));
        }
        if bias.shape() != [c_out] {
            return Err(Error::shape(format!("conv bias must be [{c_out}], got {:?}", bias.shape())));
        }
        let (oh, ow) = conv_output_dims(h, w, k, padding)?;
        Ok(ConvGeometry { c_in, h, w, c_out, k, pad: padding.amount(k), oh, ow })
    }

    /// For kernel offset `i` along an axis of input length `n` and output length `m`,
    /// the output range `[lo, hi)` whose source index `o + i - pad` lies inside the input.
    fn span(&self, i: usize, n: usize, m: usize) -> (usize, usize) {
        let lo = self.pad.saturating_sub(i);
        let hi = (n + self.pad).saturating_sub(i).min(m);
        (lo, hi.max(lo))
    }
}

pub fn conv_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, padding: Padding) -> Result<Tensor> {
    let g = ConvGeometry::new(input, weights, bias, padding)?;
    let x = input.data();
    let wt = weights.data();
    let mut out = vec![0.0; g.c_out * g.oh * g.ow];
    for o in 0..g.c_out {
        let plane = &mut out[o * g.oh * g.ow..(o + 1) * g.oh * g.ow];
        plane.iter_mut().for_each(|v| *v = bias.data()[o]);
        for c in 0..g.c_in {
            let src = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
            for i in 0..g.k {
                let (y0, y1) = g.span(i, g.h, g.oh);
                for j in 0..g.k {
                    let wv = wt[((o * g.c_in + c) * g.k + i) * g.k + j];
                    let (x0, x1) = g.span(j, g.w, g.ow);
                    if x1 <= x0 {
                        continue;
                    }
                    for y in y0..y1 {
                        let sy = y + i - g.pad;
                        let dst = &mut plane[y * g.ow + x0..y * g.ow + x1];
                        let s = &src[sy * g.w + x0 + j - g.pad..sy * g.w + x1 + j - g.pad];
                        dst.iter_mut().zip(s).for_each(|(d, v)| *d += wv * v);
                    }
                }
            }
        }
    }
    Tensor::new(vec![g.c_out, g.oh, g.ow], out)
}

/// Gradients of a convolution with respect to its input, weights and bias.
pub fn conv_backward(
    input: &Tensor,
    weights: &Tensor,
    bias: &Tensor,
    padding: Padding,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let g = ConvGeometry::new(input, weights, bias, padding)?;
    if grad_out.shape() != [g.c_out, g.oh, g.ow] {
        return Err(Error::shape(format!("conv output gradient has shape {:?}", grad_out.shape())));
    }
    let x = input.data();
    let wt = weights.data();
    let go = grad_out.data();
    let mut gx = vec![0.0; x.len()];
    let mut gw = vec![0.0; wt.len()];
    let mut gb = vec![0.0; g.c_out];
    for o in 0..g.c_out {
        let gplane = &go[o * g.oh * g.ow..(o + 1) * g.oh * g.ow];
        gb[o] = gplane.iter().sum();
        for c in 0..g.c_in {
            let src = &x[c * g.h * g.w..(c + 1) * g.h * g.w];
            let gsrc = &mut gx[c * g.h * g.w..(c + 1) * g.h * g.w];
            for i in 0..g.k {
                let (y0, y1) = g.span(i, g.h, g.oh);
                for j in 0..g.k {
                    let widx = ((o * g.c_in + c) * g.k + i) * g.k + j;
                    let wv = wt[widx];
                    let (x0, x1) = g.span(j, g.w, g.ow);
                    if x1 <= x0 {
                        continue;
                    }
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let sy = y + i - g.pad;
                        let grow = &gplane[y * g.ow + x0..y * g.ow + x1];
                        let range = sy * g.w + x0 + j - g.pad..sy * g.w + x1 + j - g.pad;
                        acc += grow.iter().zip(&src[range.clone()]).map(|(a, b)| a * b).sum::<f64>();
                        gsrc[range].iter_mut().zip(grow).for_each(|(d, v)| *d += wv * v);
                    }
                    gw[widx] += acc;
                }
            }
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gx)?,
        Tensor::new(weights.shape().to_vec(), gw)?,
        Tensor::new(vec![g.c_out], gb)?,
    ))
}

pub fn relu(input: &Tensor) -> Tensor {
    let data = input.data().iter().map(|v| v.max(0.0)).collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// Passes the gradient where the pre-activation is strictly positive.
pub fn relu_backward(pre_activation: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if pre_activation.shape() != grad_out.shape() {
        return Err(Error::shape("relu gradient shape mismatch"));
    }
    let data = pre_activation
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(x, g)| if *x > 0.0 { *g } else { 0.0 })
        .collect();
    Tensor::new(grad_out.shape().to_vec(), data)
}

/// Output length of a `p`-wide, stride-`s` pooling window along an axis of length `n`.
pub fn pool_output_len(n: usize, p: usize, s: usize) -> Result<usize> {
    if p == 0 || s == 0 {
        return Err(Error::domain("pooling window and stride must be >= 1"));
    }
    if p > n {
        return Err(Error::shape(format!("pooling window {p} is larger than the input ({n})")));
    }
    Ok((n - p) / s + 1)
}

/// Max over `p x p` windows with stride `s`; also returns the flat input index
/// of each maximum (ties resolve to the lowest flat index).
pub fn maxpool_overlap(input: &Tensor, p: usize, s: usize) -> Result<(Tensor, Vec<usize>)> {
    let (c, h, w) = dims3(input, "pool input")?;
    let oh = pool_output_len(h, p, s)?;
    let ow = pool_output_len(w, p, s)?;
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_idx = base + oy * s * w + ox * s;
                let mut best = x[best_idx];
                for i in 0..p {
                    let row = base + (oy * s + i) * w + ox * s;
                    for j in 0..p {
                        let idx = row + j;
                        // strict comparison keeps the earliest (lowest index) maximum
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                arg.push(best_idx);
            }
        }
    }
    Ok((Tensor::new(vec![c, oh, ow], out)?, arg))
}

/// Routes each output gradient to the recorded argmax position.
pub fn maxpool_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(Error::shape("pool argmax and gradient lengths differ"));
    }
    let mut gx = Tensor::zeros(input_shape);
    let data = gx.data_mut();
    for (idx, g) in argmax.iter().zip(grad_out.data()) {
        *data
            .get_mut(*idx)
            .ok_or_else(|| Error::shape("pool argmax outside the input"))? += g;
    }
    Ok(gx)
}

/// `y = W x + b` with `W` shaped `[out, in]`.
pub fn fc_forward(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (n_out, n_in) = match *weights.shape() {
        [o, i] => (o, i),
        ref s => return Err(Error::shape(format!("fc weights must be [out, in], got {s:?}"))),
    };
    if input.len() != n_in {
        return Err(Error::shape(format!("fc expects {n_in} inputs, got {}", input.len())));
    }
    if bias.shape() != [n_out] {
        return Err(Error::shape(format!("fc bias must be [{n_out}], got {:?}", bias.shape())));
    }
    let x = input.data();
    let out = weights
        .data()
        .chunks_exact(n_in)
        .zip(bias.data())
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect();
    Tensor::new(vec![n_out], out)
}

pub fn fc_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor)> {
    let (n_out, n_in) = match *weights.shape() {
        [o, i] => (o, i),
        ref s => return Err(Error::shape(format!("fc weights must be [out, in], got {s:?}"))),
    };
    if input.len() != n_in || grad_out.len() != n_out {
        return Err(Error::shape("fc gradient dimensions disagree"));
    }
    let x = input.data();
    let mut gx = vec![0.0; n_in];
    let mut gw = vec![0.0; n_out * n_in];
    for (o, g) in grad_out.data().iter().enumerate() {
        let row = &weights.data()[o * n_in..(o + 1) * n_in];
        gx.iter_mut().zip(row).for_each(|(d, w)| *d += g * w);
        gw[o * n_in..(o + 1) * n_in].iter_mut().zip(x).for_each(|(d, v)| *d = g * v);
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gx)?,
        Tensor::new(vec![n_out, n_in], gw)?,
        grad_out.clone().reshape(&[n_out])?,
    ))
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax cross-entropy for one sample and its gradient with respect to the logits.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::domain(format!("label {label} out of range for {} classes", logits.len())));
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits[label];
    let mut grad = softmax(logits);
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Mean cross-entropy over a batch of `(logits, label)` pairs and per-sample gradients
/// already divided by the batch size.
pub fn batch_loss(batch: &[(Vec<f64>, usize)]) -> Result<(f64, Vec<Vec<f64>>)> {
    if batch.is_empty() {
        return Err(Error::domain("empty batch"));
    }
    let n = batch.len() as f64;
    let mut total = 0.0;
    let mut grads = Vec::with_capacity(batch.len());
    for (logits, label) in batch {
        let (l, mut g) = cross_entropy(logits, *label)?;
        total += l;
        g.iter_mut().for_each(|v| *v /= n);
        grads.push(g);
    }
    Ok((total / n, grads))
}
