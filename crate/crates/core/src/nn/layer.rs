use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Layer type and its static geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    /// Fully connected; accepts any input with `inputs` elements (implicit flatten).
    Dense { inputs: usize, outputs: usize },
    /// Stride 1, no padding.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    /// Non-overlapping max pooling; odd extents are floored.
    MaxPool { size: usize },
    Relu,
    Softmax,
}

impl LayerKind {
    pub fn is_weighted(&self) -> bool {
        matches!(self, LayerKind::Dense { .. } | LayerKind::Conv2d { .. })
    }

    /// Expected `(weights, bias)` shapes; parameter-free layers return `[0]`.
    pub fn param_shapes(&self) -> (Vec<usize>, Vec<usize>) {
        match *self {
            LayerKind::Dense { inputs, outputs } => (vec![outputs, inputs], vec![outputs]),
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => (
                vec![out_channels, in_channels, kernel, kernel],
                vec![out_channels],
            ),
            _ => (vec![0], vec![0]),
        }
    }

    /// Output shape produced from `input`, or a shape error.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerKind::Dense { inputs, outputs } => {
                let n: usize = input.iter().product();
                if n != inputs {
                    return Err(Error::shape(format!(
                        "dense layer expects {inputs} inputs, got shape {input:?}"
                    )));
                }
                Ok(vec![outputs])
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => {
                let [c, h, w] = chw(input)?;
                if c != in_channels {
                    return Err(Error::shape(format!(
                        "conv expects {in_channels} channels, got {c}"
                    )));
                }
                if kernel > h || kernel > w {
                    return Err(Error::shape(format!(
                        "kernel {kernel} exceeds input extent {h}x{w}"
                    )));
                }
                Ok(vec![out_channels, h - kernel + 1, w - kernel + 1])
            }
            LayerKind::MaxPool { size } => {
                let [c, h, w] = chw(input)?;
                if h / size == 0 || w / size == 0 {
                    return Err(Error::shape(format!(
                        "pool size {size} exceeds input extent {h}x{w}"
                    )));
                }
                Ok(vec![c, h / size, w / size])
            }
            LayerKind::Relu | LayerKind::Softmax => Ok(input.to_vec()),
        }
    }
}

pub(crate) fn chw(shape: &[usize]) -> Result<[usize; 3]> {
    match shape {
        &[c, h, w] => Ok([c, h, w]),
        _ => Err(Error::shape(format!(
            "expected a channels x height x width input, got {shape:?}"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub kind: LayerKind,
    /// Dense: out x in. Conv: c_out x c_in x k x k.
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(kind: LayerKind, weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let layer = Layer {
            kind,
            weights,
            bias,
        };
        layer.validate()?;
        Ok(layer)
    }

    pub fn dense(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let &[outputs, inputs] = weights.shape() else {
            return Err(Error::shape(format!(
                "dense weights must be out x in, got {:?}",
                weights.shape()
            )));
        };
        Self::new(LayerKind::Dense { inputs, outputs }, weights, bias)
    }

    pub fn conv2d(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let &[out_channels, in_channels, kernel, k2] = weights.shape() else {
            return Err(Error::shape(format!(
                "conv weights must be c_out x c_in x k x k, got {:?}",
                weights.shape()
            )));
        };
        if kernel != k2 {
            return Err(Error::shape("conv kernels must be square"));
        }
        Self::new(
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            },
            weights,
            bias,
        )
    }

    /// Zero-initialised weighted layer of the given kind.
    pub fn zeros(kind: LayerKind) -> Self {
        let (w, b) = kind.param_shapes();
        Layer {
            kind,
            weights: Tensor::zeros(w),
            bias: Tensor::zeros(b),
        }
    }

    pub fn relu() -> Self {
        Self::zeros(LayerKind::Relu)
    }

    pub fn softmax() -> Self {
        Self::zeros(LayerKind::Softmax)
    }

    pub fn max_pool(size: usize) -> Self {
        Self::zeros(LayerKind::MaxPool { size })
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LayerKind::Conv2d { kernel: 0, .. } => {
                return Err(Error::shape("conv kernel must be >= 1"))
            }
            LayerKind::MaxPool { size: 0 } => return Err(Error::shape("pool size must be >= 1")),
            _ => {}
        }
        let (w, b) = self.kind.param_shapes();
        if self.weights.shape() != w.as_slice() || self.bias.shape() != b.as_slice() {
            return Err(Error::shape(format!(
                "{:?} expects weights {w:?} and bias {b:?}, got {:?} and {:?}",
                self.kind,
                self.weights.shape(),
                self.bias.shape()
            )));
        }
        self.weights.ensure_finite("layer weights")?;
        self.bias.ensure_finite("layer bias")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_floors_odd_extents() {
        let k = LayerKind::MaxPool { size: 2 };
        assert_eq!(k.output_shape(&[8, 13, 13]).unwrap(), vec![8, 6, 6]);
    }

    #[test]
    fn conv_output_shape() {
        let k = LayerKind::Conv2d {
            in_channels: 1,
            out_channels: 8,
            kernel: 3,
        };
        assert_eq!(k.output_shape(&[1, 32, 32]).unwrap(), vec![8, 30, 30]);
        assert!(k.output_shape(&[1, 2, 5]).is_err());
        assert!(k.output_shape(&[2, 5, 5]).is_err());
    }

    #[test]
    fn dense_accepts_any_shape_with_matching_size() {
        let k = LayerKind::Dense {
            inputs: 512,
            outputs: 5,
        };
        assert_eq!(k.output_shape(&[32, 4, 4]).unwrap(), vec![5]);
        assert!(k.output_shape(&[511]).is_err());
    }

    #[test]
    fn rejects_bad_parameter_shapes() {
        let w = Tensor::<f64>::zeros(vec![3, 2]);
        assert!(Layer::dense(w.clone(), Tensor::zeros(vec![3])).is_ok());
        assert!(Layer::dense(w, Tensor::zeros(vec![2])).is_err());
        assert!(Layer::<f64>::new(LayerKind::MaxPool { size: 0 }, Tensor::empty(), Tensor::empty()).is_err());
    }
}
