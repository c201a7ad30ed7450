//! The six benchmark networks and their (de)serialisation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bench::data::{Dataset, Modality, EMG_FEATURES, IMAGE_SIDE};
use crate::bench::ntc::NtcContainer;
use crate::error::{Error, Result};
use crate::memsim::MappedNetwork;
use crate::nn::{Architecture, BranchArch, NetworkSpec};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const FUSION_WIDTH: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchNetwork {
    /// 16-128-128-5 on EMG features.
    MlpEmgA,
    /// 16-230-5 on EMG features.
    MlpEmgB,
    /// 8c3-2p-16c3-2p-32c3-512-5 on frames.
    CnnAps,
    /// Four 400-210-5 MLPs on frame quadrants (cost model); see [`BenchNetwork::architecture`].
    MlpAps,
    /// `MlpEmgA` and `CnnAps` joined by a 5-neuron dense layer.
    FusedCnn,
    /// `MlpEmgB` and `MlpAps` joined by a 5-neuron dense layer.
    FusedMlp,
}

const CNN: &str = "8c3-2p-16c3-2p-32c3-512-5";

impl BenchNetwork {
    pub const ALL: [BenchNetwork; 6] = [
        BenchNetwork::MlpEmgA,
        BenchNetwork::MlpEmgB,
        BenchNetwork::CnnAps,
        BenchNetwork::MlpAps,
        BenchNetwork::FusedCnn,
        BenchNetwork::FusedMlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchNetwork::MlpEmgA => "mlp_emg_a",
            BenchNetwork::MlpEmgB => "mlp_emg_b",
            BenchNetwork::CnnAps => "cnn_aps",
            BenchNetwork::MlpAps => "mlp_aps",
            BenchNetwork::FusedCnn => "fused_cnn",
            BenchNetwork::FusedMlp => "fused_mlp",
        }
    }

    pub fn modality(self) -> Modality {
        match self {
            BenchNetwork::MlpEmgA | BenchNetwork::MlpEmgB => Modality::Emg,
            BenchNetwork::CnnAps | BenchNetwork::MlpAps => Modality::Aps,
            BenchNetwork::FusedCnn | BenchNetwork::FusedMlp => Modality::EmgAps,
        }
    }

    fn image_shape() -> [usize; 3] {
        [1, IMAGE_SIDE, IMAGE_SIDE]
    }

    fn branch(text: &str, shape: &[usize]) -> BranchArch {
        BranchArch::parse(text, shape).expect("built-in architecture strings parse")
    }

    /// Architecture as published, used for hardware costing. The APS MLP is
    /// four replicas over 20x20 quadrants.
    pub fn cost_architecture(self) -> Architecture {
        let emg = [EMG_FEATURES];
        let quad = Self::branch("4x400-210-5", &[400]);
        match self {
            BenchNetwork::MlpEmgA => Architecture::single(Self::branch("16-128-128-5", &emg)),
            BenchNetwork::MlpEmgB => Architecture::single(Self::branch("16-230-5", &emg)),
            BenchNetwork::CnnAps => Architecture::single(Self::branch(CNN, &Self::image_shape())),
            BenchNetwork::MlpAps => Architecture::single(quad),
            BenchNetwork::FusedCnn => Architecture::fused(
                Self::branch("16-128-128-5", &emg),
                Self::branch(CNN, &Self::image_shape()),
                FUSION_WIDTH,
            ),
            BenchNetwork::FusedMlp => Architecture::fused(Self::branch("16-230-5", &emg), quad, FUSION_WIDTH),
        }
    }

    /// Architecture that is trained and simulated. Identical to the cost
    /// architecture except for the APS MLP, which sees the full 32x32 frame
    /// through one 1024-210-5 MLP instead of four quadrant replicas.
    pub fn architecture(self) -> Architecture {
        let full_frame = || Self::branch("210-5", &Self::image_shape());
        match self {
            BenchNetwork::MlpAps => Architecture::single(full_frame()),
            BenchNetwork::FusedMlp => Architecture::fused(
                Self::branch("16-230-5", &[EMG_FEATURES]),
                full_frame(),
                FUSION_WIDTH,
            ),
            other => other.cost_architecture(),
        }
    }
}

impl fmt::Display for BenchNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for BenchNetwork {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BenchNetwork::ALL
            .into_iter()
            .find(|n| n.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = BenchNetwork::ALL.iter().map(|n| n.name()).collect();
                Error::config(format!("unknown network `{s}`; expected one of {}", known.join(", ")))
            })
    }
}

pub const ARCH_KEY: &str = "architecture";
/// Optional JSON array giving the input shape of a caption-string architecture.
pub const INPUT_SHAPE_KEY: &str = "input_shape";

/// Accepts either the JSON form written by [`network_to_ntc`] or a single
/// caption string such as `16-230-5` (external exporters write this). A
/// caption string whose first layer is a convolution needs `input_shape`.
fn parse_arch_metadata(text: &str, input_shape: Option<&str>) -> Result<Architecture> {
    let bad = |e: String| Error::container(None, format!("bad architecture metadata: {e}"));
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| bad(e.to_string()));
    }
    match input_shape {
        Some(shape) => {
            let shape: Vec<usize> = serde_json::from_str(shape).map_err(|e| bad(format!("input_shape: {e}")))?;
            BranchArch::parse(text, &shape).map(Architecture::single)
        }
        None => Architecture::mlp(text),
    }
    .map_err(|e| bad(e.to_string()))
}

/// Weighted-layer parameters in evaluation order: `layers.{k}.weight` and
/// `layers.{k}.bias`, dense as `out x in`, conv as `c_out x c_in x k x k`.
pub fn network_to_ntc<T: Scalar>(arch: &Architecture, net: &NetworkSpec<T>) -> Result<NtcContainer> {
    let mut c = NtcContainer::default();
    let json = serde_json::to_string(arch).map_err(|e| Error::config(format!("architecture: {e}")))?;
    c.metadata.insert(ARCH_KEY.into(), json);
    for (k, layer) in net.weighted_layers().enumerate() {
        c.push(format!("layers.{k}.weight"), layer.weights.cast());
        c.push(format!("layers.{k}.bias"), layer.bias.cast());
    }
    Ok(c)
}

/// Rebuilds a network from a container written by [`network_to_ntc`] or an
/// external exporter using the same naming.
pub fn network_from_ntc<T: Scalar>(c: &NtcContainer) -> Result<(Architecture, NetworkSpec<T>)> {
    let json = c
        .metadata
        .get(ARCH_KEY)
        .ok_or_else(|| Error::container(None, format!("metadata key `{ARCH_KEY}` missing")))?;
    let arch = parse_arch_metadata(json, c.metadata.get(INPUT_SHAPE_KEY).map(String::as_str))?;
    let mut net: NetworkSpec<T> = arch.build(0)?;
    let mut used = 0;
    for (k, layer) in net.weighted_layers_mut().enumerate() {
        for (suffix, slot) in [("weight", &mut layer.weights), ("bias", &mut layer.bias)] {
            let name = format!("layers.{k}.{suffix}");
            let t = c
                .get(&name)
                .ok_or_else(|| Error::container(Some(&name), "missing from container"))?;
            if t.shape() != slot.shape() {
                return Err(Error::container(
                    Some(&name),
                    format!("expected shape {:?}, found {:?}", slot.shape(), t.shape()),
                ));
            }
            *slot = t.cast();
            used += 1;
        }
    }
    if used != c.tensors.len() {
        let extra: Vec<_> = c
            .tensors
            .iter()
            .map(|(n, _)| n.as_str())
            .filter(|n| {
                !n.strip_prefix("layers.")
                    .and_then(|r| r.split_once('.'))
                    .is_some_and(|(k, s)| k.parse::<usize>().is_ok_and(|k| k < used / 2) && (s == "weight" || s == "bias"))
            })
            .collect();
        return Err(Error::container(
            extra.first().copied(),
            format!("unexpected tensors: {}", extra.join(", ")),
        ));
    }
    net.validate()?;
    Ok((arch, net))
}

/// Conductance and device-bound matrices of every tile, plus per-layer
/// scale and tuning as metadata, for offline inspection.
pub fn mapped_to_ntc(m: &MappedNetwork) -> Result<NtcContainer> {
    let mut c = NtcContainer::default();
    for (name, tile) in m.named_tiles() {
        c.push(format!("{name}.conductance"), tile.conductance.cast());
        c.push(format!("{name}.g_on"), tile.g_on.cast());
        c.push(format!("{name}.g_off"), tile.g_off.cast());
    }
    for (k, layer) in m.crossbar_layers().enumerate() {
        let info = serde_json::json!({
            "rows": layer.rows,
            "outputs": layer.outputs,
            "scale_k": layer.scale_k,
            "input_scale": layer.input_scale,
            "tuning_a": layer.tuning.a,
            "tuning_b": layer.tuning.b,
            "tuning_degenerate": layer.tuning.degenerate,
            "clipped_weights": layer.clipped_weights,
            "tiles": layer.tile_count(),
        });
        c.metadata.insert(format!("layer{k}"), info.to_string());
        c.push(format!("layer{k}.bias"), Tensor::vector(layer.bias.iter().map(|&b| b as f32).collect()));
    }
    c.metadata.insert(
        "device".into(),
        serde_json::to_string(&m.device).map_err(|e| Error::config(e.to_string()))?,
    );
    Ok(c)
}

/// Dataset as four tensors: `emg`, `images`, `labels` and `sessions`. The
/// integer columns are stored as exact small floats.
pub fn dataset_to_ntc(ds: &Dataset<f64>) -> NtcContainer {
    let ints = |v: &[usize]| Tensor::vector(v.iter().map(|&x| x as f32).collect());
    let mut c = NtcContainer::default();
    c.metadata.insert("kind".into(), "dataset".into());
    c.push("emg", ds.emg.cast());
    c.push("images", ds.images.cast());
    c.push("labels", ints(&ds.labels));
    c.push("sessions", ints(&ds.sessions));
    c
}

pub fn dataset_from_ntc(c: &NtcContainer) -> Result<Dataset<f64>> {
    let get = |name: &str| c.get(name).ok_or_else(|| Error::container(Some(name), "missing from container"));
    let ints = |name: &str| -> Result<Vec<usize>> {
        get(name)?
            .data()
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::container(Some(name), format!("{v} is not a non-negative integer")))
                }
            })
            .collect()
    };
    Dataset::new(get("emg")?.cast(), get("images")?.cast(), ints("labels")?, ints("sessions")?)
}
