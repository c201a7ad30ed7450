use crate::error::{Error, Result};
use crate::nn::layer::{Layer, LayerKind};
use crate::nn::ops::{apply_layer, softmax};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Declarative layer graph: one or two branches and an optional fusion head
/// over the concatenated branch outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec<T> {
    pub branches: Vec<Vec<Layer<T>>>,
    /// Dense layer(s) over the concatenated branch outputs, ending in softmax.
    pub fusion_head: Option<Vec<Layer<T>>>,
    pub input_shapes: Vec<Vec<usize>>,
}

/// Addresses a layer inside a [`NetworkSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LayerPos {
    Branch { branch: usize, index: usize },
    Head { index: usize },
}

impl<T: Scalar> NetworkSpec<T> {
    pub fn new(
        branches: Vec<Vec<Layer<T>>>,
        fusion_head: Option<Vec<Layer<T>>>,
        input_shapes: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let net = NetworkSpec {
            branches,
            fusion_head,
            input_shapes,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn single(layers: Vec<Layer<T>>, input_shape: Vec<usize>) -> Result<Self> {
        Self::new(vec![layers], None, vec![input_shape])
    }

    /// Checks structure, parameter shapes and shape propagation.
    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() || self.branches.len() > 2 {
            return Err(Error::shape(format!(
                "a network has 1 or 2 branches, got {}",
                self.branches.len()
            )));
        }
        if self.input_shapes.len() != self.branches.len() {
            return Err(Error::shape("one input shape per branch is required"));
        }
        if self.branches.len() == 2 && self.fusion_head.is_none() {
            return Err(Error::shape("two-branch networks need a fusion head"));
        }
        for layer in self.layers() {
            layer.validate()?;
        }
        let softmaxes: Vec<_> = self
            .layers_with_pos()
            .filter(|(_, l)| l.kind == LayerKind::Softmax)
            .map(|(p, _)| p)
            .collect();
        let last = self.output_pos();
        if softmaxes.len() != 1 || Some(softmaxes[0]) != last {
            return Err(Error::shape(
                "exactly one softmax is allowed, as the final layer",
            ));
        }
        if let Some(head) = &self.fusion_head {
            match head.first().map(|l| l.kind) {
                Some(LayerKind::Dense { .. }) => {}
                _ => return Err(Error::shape("fusion head must start with a dense layer")),
            }
        }
        self.output_width().map(|_| ())
    }

    /// Width of each branch output after shape propagation.
    pub fn branch_output_shapes(&self) -> Result<Vec<Vec<usize>>> {
        self.branches
            .iter()
            .zip(&self.input_shapes)
            .map(|(layers, shape)| {
                layers
                    .iter()
                    .try_fold(shape.clone(), |s, l| l.kind.output_shape(&s))
            })
            .collect()
    }

    pub fn output_width(&self) -> Result<usize> {
        let outs = self.branch_output_shapes()?;
        let concat: usize = outs.iter().map(|s| s.iter().product::<usize>()).sum();
        match &self.fusion_head {
            None => Ok(concat),
            Some(head) => head
                .iter()
                .try_fold(vec![concat], |s, l| l.kind.output_shape(&s))
                .map(|s| s.iter().product()),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.layers_with_pos().map(|(_, l)| l)
    }

    /// All layers in evaluation order: branches first, then the head.
    pub fn layers_with_pos(&self) -> impl Iterator<Item = (LayerPos, &Layer<T>)> {
        let branches = self.branches.iter().enumerate().flat_map(|(b, ls)| {
            ls.iter()
                .enumerate()
                .map(move |(i, l)| (LayerPos::Branch { branch: b, index: i }, l))
        });
        let head = self
            .fusion_head
            .iter()
            .flat_map(|h| h.iter().enumerate().map(|(i, l)| (LayerPos::Head { index: i }, l)));
        branches.chain(head)
    }

    /// Weighted layers in evaluation order, mutable.
    pub fn weighted_layers_mut(&mut self) -> impl Iterator<Item = &mut Layer<T>> {
        self.branches
            .iter_mut()
            .flatten()
            .chain(self.fusion_head.iter_mut().flatten())
            .filter(|l| l.kind.is_weighted())
    }

    pub fn weighted_layers(&self) -> impl Iterator<Item = &Layer<T>> {
        self.layers().filter(|l| l.kind.is_weighted())
    }

    fn output_pos(&self) -> Option<LayerPos> {
        match &self.fusion_head {
            Some(h) if !h.is_empty() => Some(LayerPos::Head { index: h.len() - 1 }),
            Some(_) => None,
            None if self.branches.len() == 1 => self.branches[0]
                .len()
                .checked_sub(1)
                .map(|index| LayerPos::Branch { branch: 0, index }),
            None => None,
        }
    }

    pub fn check_inputs(&self, inputs: &[Tensor<T>]) -> Result<()> {
        if inputs.len() != self.branches.len() {
            return Err(Error::shape(format!(
                "network has {} branches, got {} inputs",
                self.branches.len(),
                inputs.len()
            )));
        }
        for (i, (x, s)) in inputs.iter().zip(&self.input_shapes).enumerate() {
            if x.shape() != s.as_slice() {
                return Err(Error::shape(format!(
                    "branch {i} expects input {s:?}, got {:?}",
                    x.shape()
                )));
            }
        }
        Ok(())
    }

    /// Pre-softmax output (logits).
    pub fn forward_logits(&self, inputs: &[Tensor<T>]) -> Result<Tensor<T>> {
        self.forward_logits_with(inputs, |_, x| x)
    }

    /// Like [`forward_logits`](Self::forward_logits), but `at_weighted` sees
    /// (and may replace) the input of every weighted layer, indexed in
    /// evaluation order.
    pub fn forward_logits_with<F>(&self, inputs: &[Tensor<T>], mut at_weighted: F) -> Result<Tensor<T>>
    where
        F: FnMut(usize, Tensor<T>) -> Tensor<T>,
    {
        self.check_inputs(inputs)?;
        let mut k = 0;
        let mut run = |layers: &[Layer<T>], mut h: Tensor<T>, what: &str| -> Result<Tensor<T>> {
            for (i, layer) in layers.iter().enumerate() {
                if layer.kind == LayerKind::Softmax {
                    break;
                }
                if layer.kind.is_weighted() {
                    h = at_weighted(k, h);
                    k += 1;
                }
                h = apply_layer(layer, &h)?;
                h.ensure_finite(&format!("{what} layer {i}"))?;
            }
            Ok(h)
        };
        let mut outs = Vec::with_capacity(self.branches.len());
        for (b, (layers, x)) in self.branches.iter().zip(inputs).enumerate() {
            outs.push(run(layers, x.clone(), &format!("branch {b}"))?);
        }
        let h = concat(outs);
        match &self.fusion_head {
            Some(head) => run(head, h, "fusion head"),
            None => Ok(h),
        }
    }

    /// Class probabilities for one sample (one tensor per branch).
    pub fn forward(&self, inputs: &[Tensor<T>]) -> Result<Tensor<T>> {
        let logits = self.forward_logits(inputs)?;
        let p = softmax(&logits);
        p.ensure_finite("softmax output")?;
        Ok(p)
    }

    pub fn predict(&self, inputs: &[Tensor<T>]) -> Result<usize> {
        self.forward_logits(inputs).map(|l| l.argmax())
    }

    /// Multiply-accumulate count of one inference.
    pub fn count_macs(&self) -> Result<u64> {
        let mut total = 0u64;
        for (layers, shape) in self.branches.iter().zip(&self.input_shapes) {
            let mut s = shape.clone();
            for l in layers {
                total += layer_macs(&l.kind, &s)?;
                s = l.kind.output_shape(&s)?;
            }
        }
        if let Some(head) = &self.fusion_head {
            let outs = self.branch_output_shapes()?;
            let mut s = vec![outs.iter().map(|o| o.iter().product::<usize>()).sum()];
            for l in head {
                total += layer_macs(&l.kind, &s)?;
                s = l.kind.output_shape(&s)?;
            }
        }
        Ok(total)
    }

    pub fn num_classes(&self) -> Result<usize> {
        self.output_width()
    }

    pub fn cast<U: Scalar>(&self) -> NetworkSpec<U> {
        let cast_layers = |ls: &Vec<Layer<T>>| -> Vec<Layer<U>> {
            ls.iter()
                .map(|l| Layer {
                    kind: l.kind,
                    weights: l.weights.cast(),
                    bias: l.bias.cast(),
                })
                .collect()
        };
        NetworkSpec {
            branches: self.branches.iter().map(cast_layers).collect(),
            fusion_head: self.fusion_head.as_ref().map(cast_layers),
            input_shapes: self.input_shapes.clone(),
        }
    }
}

/// MACs contributed by one layer given its input shape.
pub fn layer_macs(kind: &LayerKind, input_shape: &[usize]) -> Result<u64> {
    let out = kind.output_shape(input_shape)?;
    Ok(match *kind {
        LayerKind::Dense { inputs, outputs } => (inputs * outputs) as u64,
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => (in_channels * kernel * kernel * out_channels * out[1] * out[2]) as u64,
        _ => 0,
    })
}

pub(crate) fn concat<T: Scalar>(parts: Vec<Tensor<T>>) -> Tensor<T> {
    if parts.len() == 1 {
        return parts.into_iter().next().unwrap();
    }
    Tensor::vector(parts.into_iter().flat_map(|t| t.into_data()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(w: Vec<f64>, out: usize, inp: usize, b: Vec<f64>) -> Layer<f64> {
        Layer::dense(Tensor::new(vec![out, inp], w).unwrap(), Tensor::vector(b)).unwrap()
    }

    #[test]
    fn identity_dense_relu_passes_nonnegative_input() {
        let id = dense(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 3, 3, vec![0.0; 3]);
        let net = NetworkSpec::single(vec![id, Layer::relu(), Layer::softmax()], vec![3]).unwrap();
        let x = Tensor::vector(vec![0.5, 0.0, 2.0]);
        assert_eq!(net.forward_logits(std::slice::from_ref(&x)).unwrap(), x);
    }

    #[test]
    fn two_by_two_mlp_matches_hand_arithmetic() {
        // W1 = [[0.5, -1.0], [2.0, 0.25]], b1 = [0.1, -0.2]
        // W2 = [[1.0, -0.5], [-1.5, 0.75]], b2 = [0.0, 0.3]
        let net = NetworkSpec::single(
            vec![
                dense(vec![0.5, -1.0, 2.0, 0.25], 2, 2, vec![0.1, -0.2]),
                Layer::relu(),
                dense(vec![1.0, -0.5, -1.5, 0.75], 2, 2, vec![0.0, 0.3]),
                Layer::softmax(),
            ],
            vec![2],
        )
        .unwrap();
        let x = Tensor::vector(vec![0.8, -0.4]);
        // h = relu([0.4 + 0.4 + 0.1, 1.6 - 0.1 - 0.2]) = [0.9, 1.3]
        // z = [0.9 - 0.65, -1.35 + 0.975 + 0.3] = [0.25, -0.075]
        let z = [0.25, -0.075];
        let logits = net.forward_logits(std::slice::from_ref(&x)).unwrap();
        for (a, e) in logits.data().iter().zip(z) {
            assert!((a - e).abs() < 1e-12);
        }
        let e0 = z[0].exp();
        let e1 = z[1].exp();
        let p = net.forward(&[x]).unwrap();
        assert!((p.data()[0] - e0 / (e0 + e1)).abs() < 1e-12);
    }

    #[test]
    fn rejects_missing_or_misplaced_softmax() {
        let l = dense(vec![1.0; 4], 2, 2, vec![0.0; 2]);
        assert!(NetworkSpec::single(vec![l.clone()], vec![2]).is_err());
        assert!(NetworkSpec::single(vec![Layer::softmax(), l.clone()], vec![2]).is_err());
        assert!(NetworkSpec::single(vec![l, Layer::softmax(), Layer::softmax()], vec![2]).is_err());
    }

    #[test]
    fn fused_network_requires_matching_head_width() {
        let b0 = vec![dense(vec![1.0; 6], 3, 2, vec![0.0; 3])];
        let b1 = vec![dense(vec![1.0; 4], 2, 2, vec![0.0; 2])];
        let good_head = vec![dense(vec![0.1; 10], 2, 5, vec![0.0; 2]), Layer::softmax()];
        let bad_head = vec![dense(vec![0.1; 8], 2, 4, vec![0.0; 2]), Layer::softmax()];
        assert!(NetworkSpec::new(vec![b0.clone(), b1.clone()], Some(good_head), vec![vec![2], vec![2]]).is_ok());
        assert!(NetworkSpec::new(vec![b0.clone(), b1.clone()], Some(bad_head), vec![vec![2], vec![2]]).is_err());
        assert!(NetworkSpec::new(vec![b0, b1], None, vec![vec![2], vec![2]]).is_err());
    }

    #[test]
    fn input_shape_mismatch_is_rejected() {
        let net = NetworkSpec::single(vec![dense(vec![1.0; 4], 2, 2, vec![0.0; 2]), Layer::softmax()], vec![2]).unwrap();
        assert!(matches!(net.forward(&[Tensor::vector(vec![1.0; 3])]), Err(Error::Shape(_))));
    }

    #[test]
    fn non_finite_activation_is_a_numeric_fault() {
        let net = NetworkSpec::single(vec![dense(vec![1e308; 4], 2, 2, vec![0.0; 2]), Layer::softmax()], vec![2]).unwrap();
        let r = net.forward(&[Tensor::vector(vec![1e308, 1e308])]);
        assert!(matches!(r, Err(Error::NumericFault(_))));
    }
}
