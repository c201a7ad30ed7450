//! Compact architecture strings (`16-230-5`, `8c3-2p-16c3-2p-32c3-512-5`,
//! `4x400-210-5`) and seeded construction of networks from them.
//!
//! Grammar, tokens separated by `-`:
//! * `N`    dense layer with N outputs (a leading `N` on a rank-1 input is the input width)
//! * `NcK`  convolution with N output channels and a KxK kernel
//! * `Pp`   PxP max pooling
//! * `Rx`   prefix: R identical copies of the branch (cost modelling only)
//!
//! ReLU follows every weighted layer except the network output; softmax
//! closes the network.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::layer::{Layer, LayerKind};
use crate::nn::network::NetworkSpec;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchToken {
    Dense(usize),
    Conv { out_channels: usize, kernel: usize },
    Pool(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BranchDoc", try_from = "BranchDoc")]
pub struct BranchArch {
    pub input_shape: Vec<usize>,
    pub replicas: usize,
    pub tokens: Vec<ArchToken>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchDoc {
    layers: String,
    input_shape: Vec<usize>,
}

impl From<BranchArch> for BranchDoc {
    fn from(b: BranchArch) -> Self {
        BranchDoc {
            layers: b.to_string(),
            input_shape: b.input_shape,
        }
    }
}

impl TryFrom<BranchDoc> for BranchArch {
    type Error = Error;
    fn try_from(d: BranchDoc) -> Result<Self> {
        BranchArch::parse(&d.layers, &d.input_shape)
    }
}

impl BranchArch {
    /// Parses a branch string against an explicit input shape.
    pub fn parse(text: &str, input_shape: &[usize]) -> Result<Self> {
        let text = text.trim();
        let (replicas, body) = match text.split_once(['x', '×']) {
            Some((r, rest)) if !r.trim().is_empty() && r.trim().chars().all(|c| c.is_ascii_digit()) => {
                (parse_count(r.trim(), text)?, rest.trim())
            }
            _ => (1, text),
        };
        let mut tokens = Vec::new();
        for (i, raw) in body.split('-').enumerate() {
            let tok = raw.trim();
            let parsed = if let Some(p) = tok.strip_suffix('p') {
                ArchToken::Pool(parse_count(p, text)?)
            } else if let Some((c, k)) = tok.split_once('c') {
                ArchToken::Conv {
                    out_channels: parse_count(c, text)?,
                    kernel: parse_count(k, text)?,
                }
            } else {
                let n = parse_count(tok, text)?;
                if i == 0 && input_shape.len() == 1 {
                    if n != input_shape[0] {
                        return Err(Error::config(format!(
                            "architecture `{text}` starts at width {n} but the input has {}",
                            input_shape[0]
                        )));
                    }
                    continue;
                }
                ArchToken::Dense(n)
            };
            tokens.push(parsed);
        }
        if !tokens.iter().any(|t| !matches!(t, ArchToken::Pool(_))) {
            return Err(Error::config(format!("architecture `{text}` has no weighted layer")));
        }
        let arch = BranchArch {
            input_shape: input_shape.to_vec(),
            replicas,
            tokens,
        };
        arch.output_width()?;
        Ok(arch)
    }

    /// MLP shorthand: the first token is the input width.
    pub fn mlp(text: &str) -> Result<Self> {
        let body = text.rsplit(['x', '×']).next().unwrap_or(text);
        let first = body.split('-').next().unwrap_or("");
        let width = parse_count(first.trim(), text)?;
        Self::parse(text, &[width])
    }

    pub fn weighted_depth(&self) -> usize {
        self.tokens
            .iter()
            .filter(|t| !matches!(t, ArchToken::Pool(_)))
            .count()
    }

    /// Layer kinds of one replica with the input shape each one sees.
    pub fn layer_kinds(&self) -> Result<Vec<(LayerKind, Vec<usize>)>> {
        let mut shape = self.input_shape.clone();
        let mut out = Vec::with_capacity(self.tokens.len());
        for t in &self.tokens {
            let kind = match *t {
                ArchToken::Dense(n) => LayerKind::Dense {
                    inputs: shape.iter().product(),
                    outputs: n,
                },
                ArchToken::Conv {
                    out_channels,
                    kernel,
                } => LayerKind::Conv2d {
                    in_channels: *shape.first().unwrap_or(&0),
                    out_channels,
                    kernel,
                },
                ArchToken::Pool(size) => LayerKind::MaxPool { size },
            };
            let next = kind.output_shape(&shape)?;
            out.push((kind, std::mem::replace(&mut shape, next)));
        }
        Ok(out)
    }

    /// Output width of one replica.
    pub fn output_width(&self) -> Result<usize> {
        let kinds = self.layer_kinds()?;
        match kinds.last() {
            Some((kind, input)) => Ok(kind.output_shape(input)?.iter().product()),
            None => Ok(self.input_shape.iter().product()),
        }
    }
}

fn parse_count(s: &str, whole: &str) -> Result<usize> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::config(format!(
            "bad token `{s}` in architecture `{whole}`"
        ))),
    }
}

impl fmt::Display for BranchArch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.replicas > 1 {
            write!(f, "{}x", self.replicas)?;
        }
        let mut parts = Vec::new();
        if self.input_shape.len() == 1 {
            parts.push(self.input_shape[0].to_string());
        }
        for t in &self.tokens {
            parts.push(match *t {
                ArchToken::Dense(n) => n.to_string(),
                ArchToken::Conv {
                    out_channels,
                    kernel,
                } => format!("{out_channels}c{kernel}"),
                ArchToken::Pool(p) => format!("{p}p"),
            });
        }
        f.write_str(&parts.join("-"))
    }
}

/// One or two branches plus an optional fusion width.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub branches: Vec<BranchArch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fusion_width: Option<usize>,
}

impl Architecture {
    pub fn single(branch: BranchArch) -> Self {
        Architecture {
            branches: vec![branch],
            fusion_width: None,
        }
    }

    pub fn fused(a: BranchArch, b: BranchArch, width: usize) -> Self {
        Architecture {
            branches: vec![a, b],
            fusion_width: Some(width),
        }
    }

    pub fn mlp(text: &str) -> Result<Self> {
        BranchArch::mlp(text).map(Self::single)
    }

    /// Weighted layers on the longest path (branches run side by side).
    pub fn weighted_depth(&self) -> usize {
        let deepest = self
            .branches
            .iter()
            .map(BranchArch::weighted_depth)
            .max()
            .unwrap_or(0);
        deepest + usize::from(self.fusion_width.is_some())
    }

    /// Builds a He-initialised network with zero biases.
    pub fn build<T: Scalar>(&self, seed: u64) -> Result<NetworkSpec<T>> {
        if self.branches.is_empty() || self.branches.len() > 2 {
            return Err(Error::config("an architecture has 1 or 2 branches"));
        }
        if self.branches.len() == 2 && self.fusion_width.is_none() {
            return Err(Error::config("two branches need a fusion width"));
        }
        if let Some(b) = self.branches.iter().find(|b| b.replicas != 1) {
            return Err(Error::config(format!(
                "replicated branch `{b}` can only be cost-modelled, not built"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fused = self.fusion_width.is_some();
        let mut branches = Vec::new();
        let mut concat = 0;
        for arch in &self.branches {
            let mut layers = Vec::new();
            let depth = arch.weighted_depth();
            let mut seen = 0;
            for (kind, _) in arch.layer_kinds()? {
                if kind.is_weighted() {
                    seen += 1;
                    layers.push(he_layer(kind, &mut rng));
                    if fused || seen < depth {
                        layers.push(Layer::relu());
                    }
                } else {
                    layers.push(Layer::zeros(kind));
                }
            }
            concat += arch.output_width()?;
            if !fused {
                layers.push(Layer::softmax());
            }
            branches.push(layers);
        }
        let head = self.fusion_width.map(|w| {
            vec![
                he_layer(
                    LayerKind::Dense {
                        inputs: concat,
                        outputs: w,
                    },
                    &mut rng,
                ),
                Layer::softmax(),
            ]
        });
        let shapes = self.branches.iter().map(|b| b.input_shape.clone()).collect();
        NetworkSpec::new(branches, head, shapes)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.branches.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(" | "))?;
        if let Some(w) = self.fusion_width {
            write!(f, " => {w}")?;
        }
        Ok(())
    }
}

fn he_layer<T: Scalar>(kind: LayerKind, rng: &mut ChaCha8Rng) -> Layer<T> {
    let (wshape, bshape) = kind.param_shapes();
    let fan_in: usize = wshape[1..].iter().product();
    let std = (2.0 / fan_in as f64).sqrt();
    let n: usize = wshape.iter().product();
    let w: Vec<T> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::of(z * std)
        })
        .collect();
    Layer {
        kind,
        weights: Tensor::new(wshape, w).expect("shape from kind"),
        bias: Tensor::zeros(bshape),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_caption_strings() {
        let cnn = BranchArch::parse("8c3-2p-16c3-2p-32c3-512-5", &[1, 32, 32]).unwrap();
        assert_eq!(cnn.weighted_depth(), 5);
        assert_eq!(cnn.output_width().unwrap(), 5);
        assert_eq!(cnn.to_string(), "8c3-2p-16c3-2p-32c3-512-5");

        let mlp = BranchArch::mlp("16-128-128-5").unwrap();
        assert_eq!(mlp.input_shape, vec![16]);
        assert_eq!(mlp.weighted_depth(), 3);

        let rep = BranchArch::mlp("4x400-210-5").unwrap();
        assert_eq!(rep.replicas, 4);
        assert_eq!(rep.weighted_depth(), 2);
        assert_eq!(rep.to_string(), "4x400-210-5");
    }

    #[test]
    fn rejects_malformed_strings() {
        assert!(BranchArch::mlp("16--5").is_err());
        assert!(BranchArch::mlp("16-0-5").is_err());
        assert!(BranchArch::parse("16-5", &[8]).is_err());
        assert!(BranchArch::parse("2p", &[1, 8, 8]).is_err());
        assert!(BranchArch::parse("8c9-5", &[1, 4, 4]).is_err());
    }

    #[test]
    fn fused_depth_adds_one_cycle() {
        let a = Architecture::fused(
            BranchArch::mlp("16-128-128-5").unwrap(),
            BranchArch::parse("8c3-2p-16c3-2p-32c3-512-5", &[1, 32, 32]).unwrap(),
            5,
        );
        assert_eq!(a.weighted_depth(), 6);
    }

    #[test]
    fn build_places_relu_and_softmax() {
        let net: NetworkSpec<f64> = Architecture::mlp("16-230-5").unwrap().build(1).unwrap();
        let kinds: Vec<_> = net.layers().map(|l| l.kind).collect();
        assert_eq!(
            kinds,
            vec![
                LayerKind::Dense { inputs: 16, outputs: 230 },
                LayerKind::Relu,
                LayerKind::Dense { inputs: 230, outputs: 5 },
                LayerKind::Softmax,
            ]
        );
        let again: NetworkSpec<f64> = Architecture::mlp("16-230-5").unwrap().build(1).unwrap();
        assert_eq!(net, again);
    }

    #[test]
    fn build_fused_network() {
        let a = Architecture::fused(
            BranchArch::mlp("16-230-5").unwrap(),
            BranchArch::mlp("64-20-5").unwrap(),
            5,
        );
        let net: NetworkSpec<f32> = a.build(3).unwrap();
        assert_eq!(net.output_width().unwrap(), 5);
        assert!(net.fusion_head.is_some());
    }

    #[test]
    fn serde_round_trip_uses_caption_text() {
        let a = Architecture::mlp("16-230-5").unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("16-230-5"));
        let back: Architecture = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
    }
}
