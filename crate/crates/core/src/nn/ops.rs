//! Layer kernels. Convolution goes through im2col so that every weighted
//! layer reduces to the same vector-matrix product the crossbars perform.

use crate::error::{Error, Result};
use crate::nn::layer::{chw, Layer, LayerKind};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Unrolls a `c x h x w` input into a `positions x (c*k*k)` patch matrix.
///
/// Row `y * (w-k+1) + x` holds the receptive field at output position
/// `(y, x)`, flattened channel-major then row-major within the kernel.
pub fn im2col<T: Scalar>(input: &Tensor<T>, k: usize) -> Result<Tensor<T>> {
    let [c, h, w] = chw(input.shape())?;
    if k == 0 || k > h || k > w {
        return Err(Error::shape(format!(
            "kernel {k} does not fit input {h}x{w}"
        )));
    }
    let (oh, ow) = (h - k + 1, w - k + 1);
    let patch = c * k * k;
    let src = input.data();
    let mut out = Vec::with_capacity(oh * ow * patch);
    for y in 0..oh {
        for x in 0..ow {
            for ch in 0..c {
                let plane = &src[ch * h * w..(ch + 1) * h * w];
                for dy in 0..k {
                    let row = (y + dy) * w + x;
                    out.extend_from_slice(&plane[row..row + k]);
                }
            }
        }
    }
    Tensor::new(vec![oh * ow, patch], out)
}

/// Inverse scatter of [`im2col`]: accumulates patch-matrix gradients back
/// onto the `c x h x w` input grid.
pub(crate) fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, k: usize) -> Vec<T> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let patch = c * k * k;
    let mut out = vec![T::zero(); c * h * w];
    for y in 0..oh {
        for x in 0..ow {
            let row = &cols[(y * ow + x) * patch..(y * ow + x + 1) * patch];
            let mut j = 0;
            for ch in 0..c {
                for dy in 0..k {
                    let base = ch * h * w + (y + dy) * w + x;
                    for dx in 0..k {
                        out[base + dx] += row[j];
                        j += 1;
                    }
                }
            }
        }
    }
    out
}

/// `out[o] = sum_i W[o][i] * x[i] + b[o]` over a row-major `out x in` matrix.
pub(crate) fn matvec_bias<T: Scalar>(weights: &[T], bias: &[T], x: &[T]) -> Vec<T> {
    let n = x.len();
    weights
        .chunks_exact(n)
        .zip(bias)
        .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &v)| acc + w * v))
        .collect()
}

/// Convolution expressed as a patch-matrix times kernel-matrix product.
pub fn conv2d_via_vmm<T: Scalar>(input: &Tensor<T>, layer: &Layer<T>) -> Result<Tensor<T>> {
    let LayerKind::Conv2d {
        out_channels,
        kernel,
        ..
    } = layer.kind
    else {
        return Err(Error::shape(format!(
            "conv2d_via_vmm needs a conv layer, got {:?}",
            layer.kind
        )));
    };
    let out_shape = layer.kind.output_shape(input.shape())?;
    let cols = im2col(input, kernel)?;
    let (positions, patch) = (cols.shape()[0], cols.shape()[1]);
    let w = layer.weights.data();
    let b = layer.bias.data();
    let mut out = vec![T::zero(); out_channels * positions];
    for (p, row) in cols.data().chunks_exact(patch).enumerate() {
        for o in 0..out_channels {
            let kern = &w[o * patch..(o + 1) * patch];
            out[o * positions + p] = kern.iter().zip(row).fold(b[o], |a, (&k, &v)| a + k * v);
        }
    }
    Tensor::new(out_shape, out)
}

/// Max pooling; also returns the flat input index chosen for every output.
pub(crate) fn max_pool_indexed<T: Scalar>(
    input: &Tensor<T>,
    size: usize,
) -> Result<(Tensor<T>, Vec<usize>)> {
    let out_shape = LayerKind::MaxPool { size }.output_shape(input.shape())?;
    let [c, h, w] = chw(input.shape())?;
    let (oh, ow) = (out_shape[1], out_shape[2]);
    let src = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut arg = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for x in 0..ow {
                let mut best = ch * h * w + y * size * w + x * size;
                for dy in 0..size {
                    for dx in 0..size {
                        let i = ch * h * w + (y * size + dy) * w + x * size + dx;
                        if src[i] > src[best] {
                            best = i;
                        }
                    }
                }
                out.push(src[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::new(out_shape, out)?, arg))
}

pub fn max_pool<T: Scalar>(input: &Tensor<T>, size: usize) -> Result<Tensor<T>> {
    max_pool_indexed(input, size).map(|(t, _)| t)
}

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Numerically stable softmax over all elements.
pub fn softmax<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let m = input
        .data()
        .iter()
        .fold(T::neg_infinity(), |a, &b| if b > a { b } else { a });
    let exps: Vec<T> = input.data().iter().map(|&v| (v - m).exp()).collect();
    let z: T = exps.iter().copied().sum();
    Tensor::new(input.shape().to_vec(), exps.into_iter().map(|e| e / z).collect())
        .expect("shape preserved")
}

pub fn dense<T: Scalar>(input: &Tensor<T>, layer: &Layer<T>) -> Result<Tensor<T>> {
    let out_shape = layer.kind.output_shape(input.shape())?;
    let y = matvec_bias(layer.weights.data(), layer.bias.data(), input.data());
    Tensor::new(out_shape, y)
}

/// Runs one layer on one sample.
pub fn apply_layer<T: Scalar>(layer: &Layer<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    match layer.kind {
        LayerKind::Dense { .. } => dense(input, layer),
        LayerKind::Conv2d { .. } => conv2d_via_vmm(input, layer),
        LayerKind::MaxPool { size } => max_pool(input, size),
        LayerKind::Relu => Ok(relu(input)),
        LayerKind::Softmax => Ok(softmax(input)),
    }
}
