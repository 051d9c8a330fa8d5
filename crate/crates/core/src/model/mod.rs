//! A small differentiable convolutional classifier.
//!
//! The network is described by an ordered layer list (convolution, ReLU,
//! max-pool, flatten, dense) with a softmax cross-entropy head. Forward and
//! backward passes are written out explicitly in double precision so that
//! parameter gradients (for training) and input gradients (for FGSM/PGD)
//! are exact analytic derivatives, checkable against finite differences.

mod train;

pub use train::{
    evaluate, mean_loss, train, AugmentHook, EpochStats, IdentityHook, TrainConfig, TrainHistory,
};

use crate::seeding::derive_seed;
use crate::spectral::ImageTensor;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("input shape mismatch: model expects {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("label {label} out of range for {class_count} classes")]
    InvalidLabel { label: usize, class_count: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    BadConfig(String),
}

/// One entry of the architecture descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        kernel: usize,
        stride: usize,
        out_channels: usize,
    },
    Relu,
    MaxPool {
        size: usize,
    },
    Flatten,
    Dense {
        out_dim: usize,
    },
}

/// Weights and bias of one parameterised layer. Non-parameterised layers
/// keep empty vectors so the set stays aligned with the architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    fn empty() -> Self {
        Self {
            weights: Vec::new(),
            bias: Vec::new(),
        }
    }
}

/// Parameter tensors for every layer; also used for gradients and
/// optimizer velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub layers: Vec<LayerParams>,
}

impl ParamSet {
    pub fn zeros_like(other: &ParamSet) -> Self {
        Self {
            layers: other
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// `self += scale * other`
    fn add_scaled(&mut self, other: &ParamSet, scale: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.weights.iter_mut().zip(&src.weights) {
                *d += scale * s;
            }
            for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
                *d += scale * s;
            }
        }
    }

    fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for v in &mut l.weights {
                *v *= s;
            }
            for v in &mut l.bias {
                *v *= s;
            }
        }
    }

    /// Sum of squares over every parameter.
    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| {
                l.weights.iter().map(|v| v * v).sum::<f64>()
                    + l.bias.iter().map(|v| v * v).sum::<f64>()
            })
            .sum()
    }

    /// All parameters are finite.
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }
}

/// The classifier: architecture descriptor, parameter tensors, input shape,
/// class count, and the seed its initial weights were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    arch: Vec<LayerSpec>,
    input_shape: (usize, usize, usize),
    class_count: usize,
    params: ParamSet,
    shapes: Vec<(usize, usize, usize)>,
    seed: u64,
}

fn chain_shapes(
    arch: &[LayerSpec],
    input_shape: (usize, usize, usize),
    class_count: usize,
) -> Result<Vec<(usize, usize, usize)>, ModelError> {
    let mut shapes = vec![input_shape];
    let mut cur = input_shape;
    for (ix, layer) in arch.iter().enumerate() {
        cur = match *layer {
            LayerSpec::Conv {
                kernel,
                stride,
                out_channels,
            } => {
                if kernel == 0 || stride == 0 || out_channels == 0 {
                    return Err(ModelError::BadArchitecture(format!(
                        "layer {ix}: conv parameters must be positive"
                    )));
                }
                let pad = kernel / 2;
                let span_h = cur.1 + 2 * pad;
                let span_w = cur.2 + 2 * pad;
                if span_h < kernel || span_w < kernel || (span_h - kernel) % stride != 0 {
                    return Err(ModelError::BadArchitecture(format!(
                        "layer {ix}: conv {kernel}x{kernel}/{stride} does not tile {}x{}",
                        cur.1, cur.2
                    )));
                }
                (
                    out_channels,
                    (span_h - kernel) / stride + 1,
                    (span_w - kernel) / stride + 1,
                )
            }
            LayerSpec::Relu => cur,
            LayerSpec::MaxPool { size } => {
                if size == 0 || cur.1 % size != 0 || cur.2 % size != 0 {
                    return Err(ModelError::BadArchitecture(format!(
                        "layer {ix}: pool {size}x{size} does not tile {}x{}",
                        cur.1, cur.2
                    )));
                }
                (cur.0, cur.1 / size, cur.2 / size)
            }
            LayerSpec::Flatten => (cur.0 * cur.1 * cur.2, 1, 1),
            LayerSpec::Dense { out_dim } => {
                if out_dim == 0 {
                    return Err(ModelError::BadArchitecture(format!(
                        "layer {ix}: dense output must be positive"
                    )));
                }
                (out_dim, 1, 1)
            }
        };
        shapes.push(cur);
    }
    if cur != (class_count, 1, 1) {
        return Err(ModelError::BadArchitecture(format!(
            "network output shape {cur:?} does not match {class_count} classes"
        )));
    }
    Ok(shapes)
}

fn volume(shape: (usize, usize, usize)) -> usize {
    shape.0 * shape.1 * shape.2
}

impl ClassifierModel {
    /// Build a model with He-style fan-in initialisation from `seed`.
    pub fn new(
        arch: Vec<LayerSpec>,
        input_shape: (usize, usize, usize),
        class_count: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let shapes = chain_shapes(&arch, input_shape, class_count)?;
        let mut layers = Vec::with_capacity(arch.len());
        for (ix, layer) in arch.iter().enumerate() {
            let in_shape = shapes[ix];
            let params = match *layer {
                LayerSpec::Conv {
                    kernel,
                    out_channels,
                    ..
                } => {
                    let fan_in = in_shape.0 * kernel * kernel;
                    let std = (2.0 / fan_in as f64).sqrt();
                    let normal = Normal::new(0.0, std).expect("std is positive");
                    let mut rng =
                        ChaCha20Rng::seed_from_u64(derive_seed(seed, "init", &[ix as u64]));
                    LayerParams {
                        weights: (0..out_channels * fan_in)
                            .map(|_| normal.sample(&mut rng))
                            .collect(),
                        bias: vec![0.0; out_channels],
                    }
                }
                LayerSpec::Dense { out_dim } => {
                    let fan_in = volume(in_shape);
                    let std = (2.0 / fan_in as f64).sqrt();
                    let normal = Normal::new(0.0, std).expect("std is positive");
                    let mut rng =
                        ChaCha20Rng::seed_from_u64(derive_seed(seed, "init", &[ix as u64]));
                    LayerParams {
                        weights: (0..out_dim * fan_in).map(|_| normal.sample(&mut rng)).collect(),
                        bias: vec![0.0; out_dim],
                    }
                }
                _ => LayerParams::empty(),
            };
            layers.push(params);
        }
        Ok(Self {
            arch,
            input_shape,
            class_count,
            params: ParamSet { layers },
            shapes,
            seed,
        })
    }

    /// The default SmallCNN:
    /// conv3x3(16)-ReLU-pool2 - conv3x3(32)-ReLU-pool2 - dense(classes).
    ///
    /// Deliberately low-capacity, which makes shortcut adoption visible at
    /// desk scale.
    pub fn small_cnn(
        input_shape: (usize, usize, usize),
        class_count: usize,
        seed: u64,
    ) -> Result<Self, ModelError> {
        Self::new(
            vec![
                LayerSpec::Conv {
                    kernel: 3,
                    stride: 1,
                    out_channels: 16,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Conv {
                    kernel: 3,
                    stride: 1,
                    out_channels: 32,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    out_dim: class_count,
                },
            ],
            input_shape,
            class_count,
            seed,
        )
    }

    pub fn from_parts(
        arch: Vec<LayerSpec>,
        input_shape: (usize, usize, usize),
        class_count: usize,
        params: ParamSet,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let shapes = chain_shapes(&arch, input_shape, class_count)?;
        let template = Self::new(arch.clone(), input_shape, class_count, seed)?;
        for (ix, (have, want)) in params
            .layers
            .iter()
            .zip(&template.params.layers)
            .enumerate()
        {
            if have.weights.len() != want.weights.len() || have.bias.len() != want.bias.len() {
                return Err(ModelError::BadArchitecture(format!(
                    "layer {ix}: parameter tensor sizes do not match the architecture"
                )));
            }
        }
        if params.layers.len() != arch.len() {
            return Err(ModelError::BadArchitecture(
                "parameter set length does not match architecture".into(),
            ));
        }
        Ok(Self {
            arch,
            input_shape,
            class_count,
            params,
            shapes,
            seed,
        })
    }

    pub fn arch(&self) -> &[LayerSpec] {
        &self.arch
    }

    pub fn input_shape(&self) -> (usize, usize, usize) {
        self.input_shape
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Stable short identifier derived from architecture and parameters.
    pub fn model_id(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.arch.len() as u64).to_le_bytes());
        for layer in &self.arch {
            match *layer {
                LayerSpec::Conv {
                    kernel,
                    stride,
                    out_channels,
                } => {
                    hasher.update([0u8]);
                    hasher.update((kernel as u64).to_le_bytes());
                    hasher.update((stride as u64).to_le_bytes());
                    hasher.update((out_channels as u64).to_le_bytes());
                }
                LayerSpec::Relu => hasher.update([1u8]),
                LayerSpec::MaxPool { size } => {
                    hasher.update([2u8]);
                    hasher.update((size as u64).to_le_bytes());
                }
                LayerSpec::Flatten => hasher.update([3u8]),
                LayerSpec::Dense { out_dim } => {
                    hasher.update([4u8]);
                    hasher.update((out_dim as u64).to_le_bytes());
                }
            }
        }
        for l in &self.params.layers {
            for v in l.weights.iter().chain(&l.bias) {
                hasher.update(v.to_le_bytes());
            }
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn check_input(&self, image: &ImageTensor) -> Result<(), ModelError> {
        let got = (image.channels(), image.height(), image.width());
        if got != self.input_shape {
            return Err(ModelError::ShapeMismatch {
                expected: format!("{:?}", self.input_shape),
                got: format!("{got:?}"),
            });
        }
        Ok(())
    }

    /// Logits for one image.
    pub fn forward(&self, image: &ImageTensor) -> Result<Vec<f64>, ModelError> {
        self.check_input(image)?;
        let trace = self.forward_trace(image.data());
        Ok(trace.acts.last().expect("trace has output").clone())
    }

    /// Logit rows for a batch, one row per image.
    pub fn forward_batch(&self, images: &[&ImageTensor]) -> Result<Vec<Vec<f64>>, ModelError> {
        for img in images {
            self.check_input(img)?;
        }
        Ok(crate::exec::map_collect(images, |img| {
            self.forward_trace(img.data())
                .acts
                .last()
                .expect("trace has output")
                .clone()
        }))
    }

    /// Argmax class, ties broken toward the lowest index.
    pub fn predict(&self, image: &ImageTensor) -> Result<usize, ModelError> {
        Ok(argmax(&self.forward(image)?))
    }

    fn forward_trace(&self, pixels: &[f64]) -> Trace {
        let mut acts = Vec::with_capacity(self.arch.len() + 1);
        acts.push(pixels.to_vec());
        let mut pool_argmax: Vec<Vec<usize>> = Vec::with_capacity(self.arch.len());
        for (ix, layer) in self.arch.iter().enumerate() {
            let input = acts.last().expect("non-empty");
            let in_shape = self.shapes[ix];
            let out_shape = self.shapes[ix + 1];
            let (out, argmax_cache) = match *layer {
                LayerSpec::Conv { kernel, stride, .. } => (
                    conv_forward(
                        input,
                        in_shape,
                        out_shape,
                        &self.params.layers[ix],
                        kernel,
                        stride,
                    ),
                    Vec::new(),
                ),
                LayerSpec::Relu => (input.iter().map(|&v| v.max(0.0)).collect(), Vec::new()),
                LayerSpec::MaxPool { size } => pool_forward(input, in_shape, size),
                LayerSpec::Flatten => (input.clone(), Vec::new()),
                LayerSpec::Dense { .. } => (
                    dense_forward(input, &self.params.layers[ix], volume(out_shape)),
                    Vec::new(),
                ),
            };
            acts.push(out);
            pool_argmax.push(argmax_cache);
        }
        Trace { acts, pool_argmax }
    }

    /// Backpropagate `dlogits`, returning parameter gradients and the
    /// gradient with respect to the input pixels.
    fn backward(&self, trace: &Trace, dlogits: &[f64]) -> (ParamSet, Vec<f64>) {
        let mut grads = ParamSet::zeros_like(&self.params);
        let mut delta = dlogits.to_vec();
        for ix in (0..self.arch.len()).rev() {
            let input = &trace.acts[ix];
            let in_shape = self.shapes[ix];
            let out_shape = self.shapes[ix + 1];
            delta = match self.arch[ix] {
                LayerSpec::Conv { kernel, stride, .. } => conv_backward(
                    input,
                    in_shape,
                    out_shape,
                    &self.params.layers[ix],
                    kernel,
                    stride,
                    &delta,
                    &mut grads.layers[ix],
                ),
                LayerSpec::Relu => input
                    .iter()
                    .zip(&delta)
                    .map(|(&x, &d)| if x > 0.0 { d } else { 0.0 })
                    .collect(),
                LayerSpec::MaxPool { .. } => {
                    let mut dinput = vec![0.0; input.len()];
                    for (out_ix, &src) in trace.pool_argmax[ix].iter().enumerate() {
                        dinput[src] += delta[out_ix];
                    }
                    dinput
                }
                LayerSpec::Flatten => delta,
                LayerSpec::Dense { .. } => dense_backward(
                    input,
                    &self.params.layers[ix],
                    volume(out_shape),
                    &delta,
                    &mut grads.layers[ix],
                ),
            };
        }
        (grads, delta)
    }
}

struct Trace {
    acts: Vec<Vec<f64>>,
    pool_argmax: Vec<Vec<usize>>,
}

fn conv_forward(
    input: &[f64],
    (ic, ih, iw): (usize, usize, usize),
    (oc, oh, ow): (usize, usize, usize),
    params: &LayerParams,
    kernel: usize,
    stride: usize,
) -> Vec<f64> {
    let pad = kernel / 2;
    let mut out = vec![0.0; oc * oh * ow];
    for o in 0..oc {
        let plane = &mut out[o * oh * ow..(o + 1) * oh * ow];
        plane.fill(params.bias[o]);
        for i in 0..ic {
            for dy in 0..kernel {
                for dx in 0..kernel {
                    let wv = params.weights[((o * ic + i) * kernel + dy) * kernel + dx];
                    if wv == 0.0 {
                        continue;
                    }
                    for oy in 0..oh {
                        let yy = (oy * stride + dy) as isize - pad as isize;
                        if yy < 0 || yy >= ih as isize {
                            continue;
                        }
                        let in_row = &input[(i * ih + yy as usize) * iw..][..iw];
                        let out_row = &mut plane[oy * ow..(oy + 1) * ow];
                        let (lo, hi) = conv_col_bounds(ow, iw, stride, dx, pad);
                        for ox in lo..hi {
                            let xx = ox * stride + dx - pad;
                            out_row[ox] += wv * in_row[xx];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Output-column range where `ox*stride + dx - pad` stays inside `[0, iw)`.
fn conv_col_bounds(ow: usize, iw: usize, stride: usize, dx: usize, pad: usize) -> (usize, usize) {
    let lo = if dx >= pad {
        0
    } else {
        (pad - dx + stride - 1) / stride
    };
    let hi_raw = (iw + pad).saturating_sub(dx + 1) / stride + 1;
    (lo.min(ow), hi_raw.min(ow))
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    input: &[f64],
    (ic, ih, iw): (usize, usize, usize),
    (oc, oh, ow): (usize, usize, usize),
    params: &LayerParams,
    kernel: usize,
    stride: usize,
    delta: &[f64],
    grads: &mut LayerParams,
) -> Vec<f64> {
    let pad = kernel / 2;
    let mut dinput = vec![0.0; input.len()];
    for o in 0..oc {
        let dplane = &delta[o * oh * ow..(o + 1) * oh * ow];
        grads.bias[o] += dplane.iter().sum::<f64>();
        for i in 0..ic {
            for dy in 0..kernel {
                for dx in 0..kernel {
                    let w_ix = ((o * ic + i) * kernel + dy) * kernel + dx;
                    let wv = params.weights[w_ix];
                    let mut dw = 0.0;
                    for oy in 0..oh {
                        let yy = (oy * stride + dy) as isize - pad as isize;
                        if yy < 0 || yy >= ih as isize {
                            continue;
                        }
                        let row_base = (i * ih + yy as usize) * iw;
                        let in_row = &input[row_base..row_base + iw];
                        let drow = &dplane[oy * ow..(oy + 1) * ow];
                        let din_row = &mut dinput[row_base..row_base + iw];
                        let (lo, hi) = conv_col_bounds(ow, iw, stride, dx, pad);
                        for ox in lo..hi {
                            let xx = ox * stride + dx - pad;
                            dw += drow[ox] * in_row[xx];
                            din_row[xx] += wv * drow[ox];
                        }
                    }
                    grads.weights[w_ix] += dw;
                }
            }
        }
    }
    dinput
}

fn pool_forward(
    input: &[f64],
    (c, ih, iw): (usize, usize, usize),
    size: usize,
) -> (Vec<f64>, Vec<usize>) {
    let oh = ih / size;
    let ow = iw / size;
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_ix = 0;
                for wy in 0..size {
                    for wx in 0..size {
                        let ix = (ch * ih + oy * size + wy) * iw + ox * size + wx;
                        // first strictly-greater wins: ties resolve to the
                        // earliest cell in scan order
                        if input[ix] > best {
                            best = input[ix];
                            best_ix = ix;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_ix);
            }
        }
    }
    (out, argmax)
}

fn dense_forward(input: &[f64], params: &LayerParams, out_dim: usize) -> Vec<f64> {
    let in_dim = input.len();
    let mut out = Vec::with_capacity(out_dim);
    for o in 0..out_dim {
        let row = &params.weights[o * in_dim..(o + 1) * in_dim];
        let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
        out.push(dot + params.bias[o]);
    }
    out
}

fn dense_backward(
    input: &[f64],
    params: &LayerParams,
    out_dim: usize,
    delta: &[f64],
    grads: &mut LayerParams,
) -> Vec<f64> {
    let in_dim = input.len();
    let mut dinput = vec![0.0; in_dim];
    for o in 0..out_dim {
        let d = delta[o];
        grads.bias[o] += d;
        let grow = &mut grads.weights[o * in_dim..(o + 1) * in_dim];
        let wrow = &params.weights[o * in_dim..(o + 1) * in_dim];
        for j in 0..in_dim {
            grow[j] += d * input[j];
            dinput[j] += wrow[j] * d;
        }
    }
    dinput
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (ix, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = ix;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of one logit row against `label`, with its logit gradient
/// (`softmax - onehot`).
fn cross_entropy_with_grad(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = logits.iter().map(|&z| (z - m).exp()).sum();
    let lse = m + sum_exp.ln();
    let loss = lse - logits[label];
    let mut grad: Vec<f64> = logits.iter().map(|&z| (z - m).exp() / sum_exp).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

/// Mean softmax cross-entropy over a batch and the exact gradients of
/// `loss + weight_decay/2 * ||params||^2` with respect to every parameter.
///
/// The returned loss is the plain cross-entropy; the decay term only enters
/// the gradients, matching how SGD weight decay is applied.
pub fn loss_and_param_grads(
    model: &ClassifierModel,
    batch: &[(&ImageTensor, usize)],
    weight_decay: f64,
) -> Result<(f64, ParamSet), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    for &(img, label) in batch {
        model.check_input(img)?;
        if label >= model.class_count {
            return Err(ModelError::InvalidLabel {
                label,
                class_count: model.class_count,
            });
        }
    }
    let per_sample = crate::exec::map_collect(batch, |&(img, label)| {
        let trace = model.forward_trace(img.data());
        let logits = trace.acts.last().expect("trace has output");
        let (loss, dlogits) = cross_entropy_with_grad(logits, label);
        let (grads, _) = model.backward(&trace, &dlogits);
        (loss, grads)
    });
    // accumulate in index order so results do not depend on thread timing
    let inv = 1.0 / batch.len() as f64;
    let mut loss_sum = 0.0;
    let mut grads = ParamSet::zeros_like(&model.params);
    for (loss, g) in &per_sample {
        loss_sum += loss;
        grads.add_scaled(g, 1.0);
    }
    grads.scale(inv);
    if weight_decay != 0.0 {
        grads.add_scaled(&model.params, weight_decay);
    }
    Ok((loss_sum * inv, grads))
}

/// Exact gradient of the cross-entropy loss with respect to every input
/// pixel. The result reuses [`ImageTensor`] as a plain grid; values are not
/// clamped.
pub fn input_gradient(
    model: &ClassifierModel,
    image: &ImageTensor,
    label: usize,
) -> Result<ImageTensor, ModelError> {
    model.check_input(image)?;
    if label >= model.class_count {
        return Err(ModelError::InvalidLabel {
            label,
            class_count: model.class_count,
        });
    }
    let trace = model.forward_trace(image.data());
    let logits = trace.acts.last().expect("trace has output");
    let (_, dlogits) = cross_entropy_with_grad(logits, label);
    let (_, dinput) = model.backward(&trace, &dlogits);
    Ok(
        ImageTensor::new(image.channels(), image.height(), image.width(), dinput)
            .expect("gradient matches image shape"),
    )
}

/// SGD with momentum: `v <- momentum*v + g`, `p <- p - lr*v`. Weight decay
/// is already folded into `grads`.
pub fn sgd_step(
    model: &mut ClassifierModel,
    grads: &ParamSet,
    velocity: &mut ParamSet,
    learning_rate: f64,
    momentum: f64,
) {
    velocity.scale(momentum);
    velocity.add_scaled(grads, 1.0);
    model.params.add_scaled(velocity, -learning_rate);
}

#[cfg(test)]
mod tests;
