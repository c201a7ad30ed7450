//! Mini-batch SGD with backpropagation, softmax cross-entropy loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layer::{chw, Layer, LayerKind};
use crate::nn::network::{concat, NetworkSpec};
use crate::nn::ops::{col2im, im2col, matvec_bias, max_pool_indexed, softmax};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Bernoulli drop rate after hidden ReLUs during training; 0 disables.
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 20,
            batch_size: 16,
            seed: 0,
            dropout: 0.25,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be finite and >= 0"));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Samples with one input tensor per branch and an integer class label.
#[derive(Clone, Debug, Default)]
pub struct LabeledSet<T> {
    pub inputs: Vec<Vec<Tensor<T>>>,
    pub labels: Vec<usize>,
}

impl<T: Scalar> LabeledSet<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn push(&mut self, inputs: Vec<Tensor<T>>, label: usize) {
        self.inputs.push(inputs);
        self.labels.push(label);
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    /// Mean training loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Gradients laid out like the network: one `(weights, bias)` pair per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub branches: Vec<Vec<(Vec<T>, Vec<T>)>>,
    pub head: Vec<(Vec<T>, Vec<T>)>,
    /// d loss / d logits of the last sample.
    pub logits: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    fn zeros_like(net: &NetworkSpec<T>) -> Self {
        let z = |ls: &Vec<Layer<T>>| {
            ls.iter()
                .map(|l| (vec![T::zero(); l.weights.len()], vec![T::zero(); l.bias.len()]))
                .collect::<Vec<_>>()
        };
        Gradients {
            branches: net.branches.iter().map(z).collect(),
            head: net.fusion_head.as_ref().map(z).unwrap_or_default(),
            logits: Vec::new(),
        }
    }

    /// Flattened view in network order (weights then bias per layer).
    pub fn flat(&self) -> Vec<T> {
        self.branches
            .iter()
            .flatten()
            .chain(&self.head)
            .flat_map(|(w, b)| w.iter().chain(b).copied())
            .collect()
    }
}

enum Cache<T> {
    Dense { input: Vec<T> },
    Conv { cols: Vec<T>, in_shape: [usize; 3] },
    Pool { arg: Vec<usize>, in_shape: Vec<usize> },
    Relu { mult: Vec<T> },
}

struct Dropout<'a> {
    rng: &'a mut ChaCha8Rng,
    rate: f64,
}

fn forward_seq<T: Scalar>(
    layers: &[Layer<T>],
    x: Tensor<T>,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<(Tensor<T>, Vec<Cache<T>>)> {
    let mut h = x;
    let mut caches = Vec::with_capacity(layers.len());
    for layer in layers {
        let (next, cache) = match layer.kind {
            LayerKind::Dense { .. } => {
                let shape = layer.kind.output_shape(h.shape())?;
                let y = matvec_bias(layer.weights.data(), layer.bias.data(), h.data());
                (Tensor::new(shape, y)?, Cache::Dense { input: h.into_data() })
            }
            LayerKind::Conv2d {
                out_channels,
                kernel,
                ..
            } => {
                let shape = layer.kind.output_shape(h.shape())?;
                let in_shape = chw(h.shape())?;
                let cols = im2col(&h, kernel)?;
                let patch = cols.shape()[1];
                let positions = cols.shape()[0];
                let w = layer.weights.data();
                let b = layer.bias.data();
                let mut out = vec![T::zero(); out_channels * positions];
                for (p, row) in cols.data().chunks_exact(patch).enumerate() {
                    for o in 0..out_channels {
                        out[o * positions + p] = w[o * patch..(o + 1) * patch]
                            .iter()
                            .zip(row)
                            .fold(b[o], |a, (&k, &v)| a + k * v);
                    }
                }
                (
                    Tensor::new(shape, out)?,
                    Cache::Conv {
                        cols: cols.into_data(),
                        in_shape,
                    },
                )
            }
            LayerKind::MaxPool { size } => {
                let in_shape = h.shape().to_vec();
                let (y, arg) = max_pool_indexed(&h, size)?;
                (y, Cache::Pool { arg, in_shape })
            }
            LayerKind::Relu => {
                let keep = dropout.as_ref().map(|d| 1.0 - d.rate).unwrap_or(1.0);
                let scale = T::of(1.0 / keep);
                let mut mult = Vec::with_capacity(h.len());
                for v in h.data_mut() {
                    let dropped = match dropout.as_deref_mut() {
                        Some(d) if d.rate > 0.0 => d.rng.random::<f64>() < d.rate,
                        _ => false,
                    };
                    let m = if *v > T::zero() && !dropped {
                        scale
                    } else {
                        T::zero()
                    };
                    *v *= m;
                    mult.push(m);
                }
                (h, Cache::Relu { mult })
            }
            LayerKind::Softmax => break,
        };
        caches.push(cache);
        h = next;
    }
    Ok((h, caches))
}

fn backward_seq<T: Scalar>(
    layers: &[Layer<T>],
    caches: &[Cache<T>],
    grad_out: Vec<T>,
    grads: &mut [(Vec<T>, Vec<T>)],
) -> Vec<T> {
    let mut g = grad_out;
    for ((layer, cache), (gw, gb)) in layers.iter().zip(caches).zip(grads.iter_mut()).rev() {
        g = match (layer.kind, cache) {
            (LayerKind::Dense { inputs, .. }, Cache::Dense { input }) => {
                let w = layer.weights.data();
                let mut gx = vec![T::zero(); inputs];
                for (o, &go) in g.iter().enumerate() {
                    gb[o] += go;
                    let row = &w[o * inputs..(o + 1) * inputs];
                    let grow = &mut gw[o * inputs..(o + 1) * inputs];
                    for i in 0..inputs {
                        grow[i] += go * input[i];
                        gx[i] += row[i] * go;
                    }
                }
                gx
            }
            (
                LayerKind::Conv2d {
                    out_channels,
                    kernel,
                    ..
                },
                Cache::Conv { cols, in_shape },
            ) => {
                let [c, h, wd] = *in_shape;
                let patch = c * kernel * kernel;
                let positions = cols.len() / patch;
                let w = layer.weights.data();
                let mut gcols = vec![T::zero(); cols.len()];
                for o in 0..out_channels {
                    let kern = &w[o * patch..(o + 1) * patch];
                    let gk = &mut gw[o * patch..(o + 1) * patch];
                    for p in 0..positions {
                        let go = g[o * positions + p];
                        if go == T::zero() {
                            continue;
                        }
                        gb[o] += go;
                        let row = &cols[p * patch..(p + 1) * patch];
                        let grow = &mut gcols[p * patch..(p + 1) * patch];
                        for j in 0..patch {
                            gk[j] += go * row[j];
                            grow[j] += kern[j] * go;
                        }
                    }
                }
                col2im(&gcols, c, h, wd, kernel)
            }
            (LayerKind::MaxPool { .. }, Cache::Pool { arg, in_shape }) => {
                let mut gx = vec![T::zero(); in_shape.iter().product()];
                for (&i, &go) in arg.iter().zip(&g) {
                    gx[i] += go;
                }
                gx
            }
            (LayerKind::Relu, Cache::Relu { mult }) => {
                g.iter().zip(mult).map(|(&a, &m)| a * m).collect()
            }
            _ => g,
        };
    }
    g
}

/// Cross-entropy loss of one sample and its parameter gradients.
fn sample_gradients<T: Scalar>(
    net: &NetworkSpec<T>,
    inputs: &[Tensor<T>],
    label: usize,
    grads: &mut Gradients<T>,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<T> {
    net.check_inputs(inputs)?;
    let mut caches = Vec::with_capacity(net.branches.len());
    let mut outs = Vec::with_capacity(net.branches.len());
    for (layers, x) in net.branches.iter().zip(inputs) {
        let (y, c) = forward_seq(layers, x.clone(), dropout.as_deref_mut())?;
        outs.push(y);
        caches.push(c);
    }
    let widths: Vec<usize> = outs.iter().map(Tensor::len).collect();
    let joined = concat(outs);
    let (logits, head_cache) = match &net.fusion_head {
        Some(head) => {
            let (y, c) = forward_seq(head, joined, dropout)?;
            (y, Some(c))
        }
        None => (joined, None),
    };
    let p = softmax(&logits);
    if label >= p.len() {
        return Err(Error::shape(format!(
            "label {label} outside {} classes",
            p.len()
        )));
    }
    let loss = -(p.data()[label].max(T::min_positive_value())).ln();
    let mut g: Vec<T> = p.data().to_vec();
    g[label] -= T::one();
    grads.logits = g.clone();

    if let (Some(head), Some(cache)) = (&net.fusion_head, &head_cache) {
        g = backward_seq(head, cache, g, &mut grads.head);
    }
    let mut offset = 0;
    for (b, layers) in net.branches.iter().enumerate() {
        let part = g[offset..offset + widths[b]].to_vec();
        offset += widths[b];
        backward_seq(layers, &caches[b], part, &mut grads.branches[b]);
    }
    Ok(loss)
}

/// Loss and gradients of one sample without dropout.
pub fn loss_and_gradients<T: Scalar>(
    net: &NetworkSpec<T>,
    inputs: &[Tensor<T>],
    label: usize,
) -> Result<(T, Gradients<T>)> {
    let mut grads = Gradients::zeros_like(net);
    let loss = sample_gradients(net, inputs, label, &mut grads, None)?;
    Ok((loss, grads))
}

pub fn cross_entropy<T: Scalar>(
    net: &NetworkSpec<T>,
    inputs: &[Tensor<T>],
    label: usize,
) -> Result<T> {
    let p = softmax(&net.forward_logits(inputs)?);
    Ok(-(p.data()[label].max(T::min_positive_value())).ln())
}

fn apply_update<T: Scalar>(net: &mut NetworkSpec<T>, grads: &Gradients<T>, step: T) {
    let layers = net
        .branches
        .iter_mut()
        .flatten()
        .chain(net.fusion_head.iter_mut().flatten());
    let pairs = grads.branches.iter().flatten().chain(&grads.head);
    for (layer, (gw, gb)) in layers.zip(pairs) {
        for (w, &g) in layer.weights.data_mut().iter_mut().zip(gw) {
            *w -= step * g;
        }
        for (b, &g) in layer.bias.data_mut().iter_mut().zip(gb) {
            *b -= step * g;
        }
    }
}

/// Trains a copy of `net` with plain mini-batch SGD.
///
/// Shuffling and dropout draw from one ChaCha stream seeded by `cfg.seed`,
/// so a fixed seed reproduces the final weights bit for bit.
pub fn train_sgd<T: Scalar>(
    net: &NetworkSpec<T>,
    data: &LabeledSet<T>,
    cfg: &TrainConfig,
) -> Result<(NetworkSpec<T>, TrainLog)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let classes = net.num_classes()?;
    if let Some(&bad) = data.labels.iter().find(|&&l| l >= classes) {
        return Err(Error::config(format!(
            "label {bad} outside the {classes} network classes"
        )));
    }
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainLog::default();
    let lr = T::of(cfg.learning_rate);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads = Gradients::zeros_like(&net);
            for &i in batch {
                let mut drop = Dropout {
                    rng: &mut rng,
                    rate: cfg.dropout,
                };
                let loss = sample_gradients(
                    &net,
                    &data.inputs[i],
                    data.labels[i],
                    &mut grads,
                    Some(&mut drop),
                )?;
                let loss = loss.as_f64();
                if !loss.is_finite() {
                    return Err(Error::numeric(format!(
                        "loss became {loss} at epoch {epoch}, batch {bi}, sample {i}"
                    )));
                }
                total += loss;
            }
            apply_update(&mut net, &grads, lr / T::of(batch.len() as f64));
        }
        let mean = total / data.len() as f64;
        log.epoch_losses.push(mean);
        for l in net.weighted_layers() {
            l.weights.ensure_finite(&format!("weights after epoch {epoch}"))?;
        }
    }
    Ok((net, log))
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn accuracy<T: Scalar>(net: &NetworkSpec<T>, data: &LabeledSet<T>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::config("evaluation set is empty"));
    }
    let mut hits = 0usize;
    for (x, &y) in data.inputs.iter().zip(&data.labels) {
        if net.predict(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / data.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub parameters_checked: usize,
}

/// Compares backprop gradients with central finite differences on every
/// parameter. Relative error is `|a - n| / max(|a| + |n|, 1e-6)`.
pub fn grad_check<T: Scalar>(
    net: &NetworkSpec<T>,
    inputs: &[Tensor<T>],
    label: usize,
    eps: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::config(format!("eps {eps} outside [1e-7, 1e-3]")));
    }
    let (_, grads) = loss_and_gradients(net, inputs, label)?;
    let analytic = grads.flat();
    let mut probe = net.clone();
    let h = T::of(eps);
    let mut worst = 0.0f64;
    let mut idx = 0;
    let n_layers = probe.branches.iter().map(Vec::len).sum::<usize>()
        + probe.fusion_head.as_ref().map_or(0, Vec::len);
    for li in 0..n_layers {
        for which in 0..2 {
            let len = {
                let l = layer_at(&mut probe, li);
                if which == 0 {
                    l.weights.len()
                } else {
                    l.bias.len()
                }
            };
            for k in 0..len {
                let orig = *param(&mut probe, li, which, k);
                *param(&mut probe, li, which, k) = orig + h;
                let plus = cross_entropy(&probe, inputs, label)?.as_f64();
                *param(&mut probe, li, which, k) = orig - h;
                let minus = cross_entropy(&probe, inputs, label)?.as_f64();
                *param(&mut probe, li, which, k) = orig;
                let numeric = (plus - minus) / (2.0 * eps);
                let a = analytic[idx].as_f64();
                let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-6);
                worst = worst.max(rel);
                idx += 1;
            }
        }
    }
    Ok(GradCheckReport {
        max_rel_error: worst,
        parameters_checked: idx,
    })
}

fn layer_at<T>(net: &mut NetworkSpec<T>, i: usize) -> &mut Layer<T> {
    net.branches
        .iter_mut()
        .flatten()
        .chain(net.fusion_head.iter_mut().flatten())
        .nth(i)
        .expect("layer index in range")
}

fn param<T: Scalar>(net: &mut NetworkSpec<T>, layer: usize, which: usize, k: usize) -> &mut T {
    let l = layer_at(net, layer);
    if which == 0 {
        &mut l.weights.data_mut()[k]
    } else {
        &mut l.bias.data_mut()[k]
    }
}
