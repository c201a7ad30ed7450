//! Trained network to crossbar-mapped network, and inference on the result.
//!
//! Every weighted layer is unrolled into a `rows x outputs` matrix (conv
//! kernels via im2col), split into row partitions of at most 256 rows and
//! column blocks of at most 64, and programmed onto separate positive and
//! negative tiles. Partition outputs are summed digitally after the ADC.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memsim::adc::{adc_read, AdcConfig, AdcMode};
use crate::memsim::device::{DeviceConfig, DevicePair, DeviceSampler};
use crate::memsim::mapping::{map_weight, quantize_state};
use crate::memsim::tile::{vmm_into, CrossbarTile, MAX_TILE_COLS, MAX_TILE_ROWS};
use crate::memsim::tuning::{fit_affine_tuning, AffineFit};
use crate::nn::network::concat;
use crate::nn::ops::{apply_layer, im2col, softmax};
use crate::nn::{Layer, LayerKind, NetworkSpec};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcSettings {
    pub bits: u32,
    #[serde(default)]
    pub mode: AdcMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversionOptions {
    /// Read voltage applied for a full-scale input, volts.
    pub v_read: f64,
    /// `None` bypasses the converters; written as `adc = "bypass"` in config files.
    #[serde(with = "adc_field")]
    pub adc: Option<AdcSettings>,
    /// Fit the per-layer affine correction on calibration data.
    pub tuning: bool,
    pub tile_rows: usize,
    pub tile_cols: usize,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        ConversionOptions {
            v_read: 0.3,
            adc: Some(AdcSettings {
                bits: 8,
                mode: AdcMode::PerPairDifferential,
            }),
            tuning: true,
            tile_rows: MAX_TILE_ROWS,
            tile_cols: MAX_TILE_COLS,
        }
    }
}

mod adc_field {
    use super::AdcSettings;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(rename_all = "snake_case")]
    enum Bypass {
        Bypass,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Bypass(Bypass),
        Settings(AdcSettings),
    }

    pub fn serialize<S: Serializer>(v: &Option<AdcSettings>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(a) => Doc::Settings(*a),
            None => Doc::Bypass(Bypass::Bypass),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<AdcSettings>, D::Error> {
        Ok(match Doc::deserialize(d)? {
            Doc::Bypass(_) => None,
            Doc::Settings(a) => Some(a),
        })
    }
}

impl ConversionOptions {
    /// Converters bypassed, tuning on: the mapping reproduces float outputs.
    pub fn ideal() -> Self {
        ConversionOptions {
            adc: None,
            ..ConversionOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_read > 0.0 && self.v_read.is_finite()) {
            return Err(Error::config("v_read must be positive"));
        }
        if !(1..=MAX_TILE_ROWS).contains(&self.tile_rows) || !(1..=MAX_TILE_COLS).contains(&self.tile_cols) {
            return Err(Error::config(format!(
                "tile size must be within {MAX_TILE_ROWS}x{MAX_TILE_COLS}"
            )));
        }
        if let Some(a) = self.adc {
            AdcConfig {
                bits: a.bits,
                i_fullscale: 1.0,
                mode: a.mode,
            }
            .validate()?;
        }
        Ok(())
    }
}

/// Contiguous block of input rows sharing one set of tiles.
#[derive(Clone, Debug, PartialEq)]
pub struct RowPartition {
    pub row_start: usize,
    pub rows: usize,
    /// Column blocks of the positive array, left to right.
    pub pos_tiles: Vec<CrossbarTile>,
    pub neg_tiles: Vec<CrossbarTile>,
    pub adc: Option<AdcConfig>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappedLayer {
    pub kind: LayerKind,
    pub rows: usize,
    pub outputs: usize,
    pub partitions: Vec<RowPartition>,
    /// Weight units per siemens of differential conductance.
    pub scale_k: f64,
    /// Input magnitude that maps to `v_read`.
    pub input_scale: f64,
    pub v_read: f64,
    pub tuning: AffineFit,
    /// Digital bias added after tuning.
    pub bias: Vec<f64>,
    /// Weights with `|w| > w_max`; zero when `w_max` is the layer maximum.
    pub clipped_weights: usize,
}

impl MappedLayer {
    pub fn tile_count(&self) -> usize {
        self.partitions
            .iter()
            .map(|p| p.pos_tiles.len() + p.neg_tiles.len())
            .sum()
    }

    /// Layer output before tuning and bias, in weight units.
    pub fn raw_output(&self, x: &[f64]) -> Vec<f64> {
        let gain = self.v_read / self.input_scale;
        let v: Vec<f64> = x
            .iter()
            .map(|&xi| (xi * gain).clamp(-self.v_read, self.v_read))
            .collect();
        let mut acc = vec![0.0; self.outputs];
        let mut i_pos = Vec::with_capacity(MAX_TILE_COLS);
        let mut i_neg = Vec::with_capacity(MAX_TILE_COLS);
        for part in &self.partitions {
            let vs = &v[part.row_start..part.row_start + part.rows];
            let mut col = 0;
            for (tp, tn) in part.pos_tiles.iter().zip(&part.neg_tiles) {
                i_pos.clear();
                i_pos.resize(tp.cols(), 0.0);
                i_neg.clear();
                i_neg.resize(tn.cols(), 0.0);
                vmm_into(vs, tp, &mut i_pos);
                vmm_into(vs, tn, &mut i_neg);
                for (j, (&ip, &ineg)) in i_pos.iter().zip(&i_neg).enumerate() {
                    acc[col + j] += match part.adc {
                        None => ip - ineg,
                        Some(a) if a.mode == AdcMode::PerPairDifferential => adc_read(ip - ineg, &a),
                        Some(a) => adc_read(ip, &a) - adc_read(ineg, &a),
                    };
                }
                col += tp.cols();
            }
        }
        let back = self.scale_k / gain;
        acc.iter_mut().for_each(|a| *a *= back);
        acc
    }

    fn finish(&self, raw: Vec<f64>) -> Vec<f64> {
        raw.into_iter()
            .zip(&self.bias)
            .map(|(r, &b)| self.tuning.apply(r) + b)
            .collect()
    }

    /// Full layer on one sample tensor.
    pub fn forward(&self, input: &Tensor<f64>) -> Result<Tensor<f64>> {
        let out_shape = self.kind.output_shape(input.shape())?;
        match self.kind {
            LayerKind::Dense { .. } => Tensor::new(out_shape, self.finish(self.raw_output(input.data()))),
            LayerKind::Conv2d { kernel, .. } => {
                let cols = im2col(input, kernel)?;
                let positions = cols.shape()[0];
                let mut out = vec![0.0; self.outputs * positions];
                for (p, row) in cols.data().chunks_exact(self.rows).enumerate() {
                    for (o, y) in self.finish(self.raw_output(row)).into_iter().enumerate() {
                        out[o * positions + p] = y;
                    }
                }
                Tensor::new(out_shape, out)
            }
            _ => Err(Error::shape("mapped layer must be dense or conv")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MappedStage {
    Crossbar(MappedLayer),
    /// Non-weighted layer evaluated digitally.
    Digital(LayerKind),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappedNetwork {
    pub branches: Vec<Vec<MappedStage>>,
    pub fusion_head: Option<Vec<MappedStage>>,
    pub input_shapes: Vec<Vec<usize>>,
    pub device: DeviceConfig,
    pub options: ConversionOptions,
}

impl MappedNetwork {
    pub fn crossbar_layers(&self) -> impl Iterator<Item = &MappedLayer> {
        self.branches
            .iter()
            .flatten()
            .chain(self.fusion_head.iter().flatten())
            .filter_map(|s| match s {
                MappedStage::Crossbar(m) => Some(m),
                MappedStage::Digital(_) => None,
            })
    }

    pub fn tile_count(&self) -> usize {
        self.crossbar_layers().map(MappedLayer::tile_count).sum()
    }

    /// Logits of the mapped network for one sample.
    pub fn forward_logits(&self, inputs: &[Tensor<f64>]) -> Result<Tensor<f64>> {
        if inputs.len() != self.branches.len() {
            return Err(Error::shape(format!(
                "network has {} branches, got {} inputs",
                self.branches.len(),
                inputs.len()
            )));
        }
        let mut outs = Vec::with_capacity(inputs.len());
        for (b, ((stages, x), shape)) in self.branches.iter().zip(inputs).zip(&self.input_shapes).enumerate() {
            if x.shape() != shape.as_slice() {
                return Err(Error::shape(format!(
                    "branch {b} expects input {shape:?}, got {:?}",
                    x.shape()
                )));
            }
            outs.push(run_stages(stages, x.clone(), &format!("mapped branch {b}"))?);
        }
        let h = concat(outs);
        match &self.fusion_head {
            Some(head) => run_stages(head, h, "mapped fusion head"),
            None => Ok(h),
        }
    }

    pub fn predict(&self, inputs: &[Tensor<f64>]) -> Result<usize> {
        self.forward_logits(inputs).map(|l| l.argmax())
    }

    /// Every tile's conductance matrix with a stable name, for export.
    pub fn named_tiles(&self) -> Vec<(String, &CrossbarTile)> {
        let mut out = Vec::new();
        for (li, layer) in self.crossbar_layers().enumerate() {
            for (pi, part) in layer.partitions.iter().enumerate() {
                for (sign, tiles) in [("pos", &part.pos_tiles), ("neg", &part.neg_tiles)] {
                    for (ci, t) in tiles.iter().enumerate() {
                        out.push((format!("layer{li}.part{pi}.{sign}{ci}"), t));
                    }
                }
            }
        }
        out
    }
}

fn run_stages(stages: &[MappedStage], mut h: Tensor<f64>, what: &str) -> Result<Tensor<f64>> {
    for (i, stage) in stages.iter().enumerate() {
        h = match stage {
            MappedStage::Digital(LayerKind::Softmax) => break,
            MappedStage::Digital(kind) => apply_layer(&Layer::zeros(*kind), &h)?,
            MappedStage::Crossbar(m) => m.forward(&h)?,
        };
        h.ensure_finite(&format!("{what} layer {i}"))?;
    }
    Ok(h)
}

/// Class probabilities of the mapped network.
pub fn mapped_forward(net: &MappedNetwork, inputs: &[Tensor<f64>]) -> Result<Tensor<f64>> {
    let p = softmax(&net.forward_logits(inputs)?);
    p.ensure_finite("mapped softmax output")?;
    Ok(p)
}

/// Programs `net` onto simulated crossbars and fits the per-layer tuning on
/// `calibration` (one input tensor per branch per sample), propagated through
/// the floating-point network.
pub fn convert_network(
    net: &NetworkSpec<f64>,
    device: &DeviceConfig,
    calibration: &[Vec<Tensor<f64>>],
    options: &ConversionOptions,
) -> Result<MappedNetwork> {
    device.validate()?;
    options.validate()?;
    net.validate()?;
    if calibration.is_empty() {
        return Err(Error::config("conversion needs at least one calibration sample"));
    }
    for s in calibration {
        net.check_inputs(s)?;
    }
    let layer_inputs = collect_layer_inputs(net, calibration)?;

    let mut weighted = 0usize;
    let mut map_seq = |layers: &[Layer<f64>]| -> Result<Vec<MappedStage>> {
        let mut out = Vec::with_capacity(layers.len());
        for layer in layers {
            if layer.kind.is_weighted() {
                let inputs = &layer_inputs[weighted];
                out.push(MappedStage::Crossbar(map_layer(layer, weighted, inputs, device, options)?));
                weighted += 1;
            } else {
                out.push(MappedStage::Digital(layer.kind));
            }
        }
        Ok(out)
    };
    let mut branches = Vec::with_capacity(net.branches.len());
    for b in &net.branches {
        branches.push(map_seq(b)?);
    }
    let fusion_head = match &net.fusion_head {
        Some(h) => Some(map_seq(h)?),
        None => None,
    };
    Ok(MappedNetwork {
        branches,
        fusion_head,
        input_shapes: net.input_shapes.clone(),
        device: device.clone(),
        options: options.clone(),
    })
}

/// Input tensors seen by each weighted layer (evaluation order) over the
/// calibration set.
fn collect_layer_inputs(
    net: &NetworkSpec<f64>,
    calibration: &[Vec<Tensor<f64>>],
) -> Result<Vec<Vec<Tensor<f64>>>> {
    let n_weighted = net.weighted_layers().count();
    let per_sample: Vec<Vec<Tensor<f64>>> = calibration
        .par_iter()
        .map(|sample| {
            let mut seen = Vec::with_capacity(n_weighted);
            let mut walk = |layers: &[Layer<f64>], mut h: Tensor<f64>| -> Result<Tensor<f64>> {
                for layer in layers {
                    if layer.kind == LayerKind::Softmax {
                        break;
                    }
                    if layer.kind.is_weighted() {
                        seen.push(h.clone());
                    }
                    h = apply_layer(layer, &h)?;
                }
                Ok(h)
            };
            let mut outs = Vec::with_capacity(sample.len());
            for (layers, x) in net.branches.iter().zip(sample) {
                outs.push(walk(layers, x.clone())?);
            }
            if let Some(head) = &net.fusion_head {
                walk(head, concat(outs))?;
            }
            Ok(seen)
        })
        .collect::<Result<_>>()?;
    let mut by_layer: Vec<Vec<Tensor<f64>>> = vec![Vec::with_capacity(calibration.len()); n_weighted];
    for seen in per_sample {
        for (l, t) in seen.into_iter().enumerate() {
            by_layer[l].push(t);
        }
    }
    Ok(by_layer)
}

/// Rows of the unrolled input: the vector itself for dense layers, the
/// im2col patches for convolutions.
fn unrolled_rows(kind: LayerKind, x: &Tensor<f64>) -> Result<Vec<Vec<f64>>> {
    match kind {
        LayerKind::Conv2d { kernel, .. } => {
            let cols = im2col(x, kernel)?;
            let patch = cols.shape()[1];
            Ok(cols.data().chunks_exact(patch).map(<[f64]>::to_vec).collect())
        }
        _ => Ok(vec![x.data().to_vec()]),
    }
}

fn layer_dims(kind: LayerKind) -> (usize, usize) {
    match kind {
        LayerKind::Dense { inputs, outputs } => (inputs, outputs),
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => (in_channels * kernel * kernel, out_channels),
        _ => (0, 0),
    }
}

fn sample_devices(device: &DeviceConfig, stream: u64, n: usize) -> Vec<DevicePair> {
    let mut s = DeviceSampler::new(device, stream);
    (0..n).map(|_| s.next_pair()).collect()
}

fn map_layer(
    layer: &Layer<f64>,
    index: usize,
    calib_inputs: &[Tensor<f64>],
    device: &DeviceConfig,
    options: &ConversionOptions,
) -> Result<MappedLayer> {
    let (rows, outputs) = layer_dims(layer.kind);
    let w = layer.weights.data();
    let w_max = layer.weights.max_abs();
    let w_max = if w_max > 0.0 { w_max } else { 1.0 };
    let (g_on_nom, g_off_nom) = (device.g_on_nominal(), device.g_off_nominal());
    let scale_k = w_max / (g_on_nom - g_off_nom);

    let pos_dev = sample_devices(device, 2 * index as u64, rows * outputs);
    let neg_dev = sample_devices(device, 2 * index as u64 + 1, rows * outputs);

    // g[r * outputs + c] for the unrolled matrix M[r][c] = W[c][r]
    let mut g_pos = vec![0.0; rows * outputs];
    let mut g_neg = vec![0.0; rows * outputs];
    let mut clipped = 0;
    for r in 0..rows {
        for c in 0..outputs {
            let m = map_weight(w[c * rows + r], w_max, g_on_nom, g_off_nom)?;
            clipped += m.clipped as usize;
            let i = r * outputs + c;
            let nominal = |g| quantize_state(g, device.n_states, g_off_nom, g_on_nom);
            let onto = |g, d: &DevicePair| quantize_state(g, device.n_states, d.g_off(), d.g_on());
            g_pos[i] = onto(nominal(m.g_pos), &pos_dev[i]);
            g_neg[i] = onto(nominal(m.g_neg), &neg_dev[i]);
        }
    }

    let i_cell_max = options.v_read * g_on_nom;
    let mut partitions = Vec::new();
    for row_start in (0..rows).step_by(options.tile_rows) {
        let prow = options.tile_rows.min(rows - row_start);
        let mut pos_tiles = Vec::new();
        let mut neg_tiles = Vec::new();
        for col_start in (0..outputs).step_by(options.tile_cols) {
            let pcol = options.tile_cols.min(outputs - col_start);
            let block = |g: &[f64], dev: &[DevicePair]| -> Result<CrossbarTile> {
                let mut gv = Vec::with_capacity(prow * pcol);
                let mut hi = Vec::with_capacity(prow * pcol);
                let mut lo = Vec::with_capacity(prow * pcol);
                for r in row_start..row_start + prow {
                    for c in col_start..col_start + pcol {
                        let i = r * outputs + c;
                        gv.push(g[i]);
                        hi.push(dev[i].g_on());
                        lo.push(dev[i].g_off());
                    }
                }
                let shape = vec![prow, pcol];
                CrossbarTile::new(
                    Tensor::new(shape.clone(), gv)?,
                    Tensor::new(shape.clone(), hi)?,
                    Tensor::new(shape, lo)?,
                )
            };
            pos_tiles.push(block(&g_pos, &pos_dev)?);
            neg_tiles.push(block(&g_neg, &neg_dev)?);
        }
        partitions.push(RowPartition {
            row_start,
            rows: prow,
            pos_tiles,
            neg_tiles,
            adc: options.adc.map(|a| AdcConfig {
                bits: a.bits,
                i_fullscale: prow as f64 * i_cell_max,
                mode: a.mode,
            }),
        });
    }

    let input_scale = calib_inputs.iter().map(Tensor::max_abs).fold(0.0, f64::max);
    let mut mapped = MappedLayer {
        kind: layer.kind,
        rows,
        outputs,
        partitions,
        scale_k,
        input_scale: if input_scale > 0.0 { input_scale } else { 1.0 },
        v_read: options.v_read,
        tuning: AffineFit::IDENTITY,
        bias: layer.bias.data().to_vec(),
        clipped_weights: clipped,
    };

    if options.tuning {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = calib_inputs
            .par_iter()
            .map(|x| -> Result<(Vec<f64>, Vec<f64>)> {
                let mut ideal = Vec::new();
                let mut raw = Vec::new();
                for row in unrolled_rows(layer.kind, x)? {
                    raw.extend(mapped.raw_output(&row));
                    ideal.extend((0..outputs).map(|c| {
                        w[c * rows..(c + 1) * rows].iter().zip(&row).map(|(a, b)| a * b).sum::<f64>()
                    }));
                }
                Ok((ideal, raw))
            })
            .collect::<Result<_>>()?;
        let (ideal, raw): (Vec<f64>, Vec<f64>) = pairs
            .into_iter()
            .flat_map(|(i, r)| i.into_iter().zip(r))
            .unzip();
        mapped.tuning = if raw.len() >= 2 {
            fit_affine_tuning(&ideal, &raw)?
        } else {
            AffineFit::IDENTITY
        };
    }
    Ok(mapped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memsim::device::StateCount;
    use crate::nn::Architecture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ideal_device() -> DeviceConfig {
        DeviceConfig {
            n_states: StateCount::UNBOUNDED,
            ..DeviceConfig::default()
        }
    }

    fn random_inputs(shape: &[usize], n: usize, seed: u64) -> Vec<Vec<Tensor<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len: usize = shape.iter().product();
        (0..n)
            .map(|_| {
                let d = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
                vec![Tensor::new(shape.to_vec(), d).unwrap()]
            })
            .collect()
    }

    #[test]
    fn tile_partitioning_16_230() {
        let net: NetworkSpec<f64> = Architecture::mlp("16-230-5").unwrap().build(1).unwrap();
        let calib = random_inputs(&[16], 8, 2);
        let m = convert_network(&net, &ideal_device(), &calib, &ConversionOptions::ideal()).unwrap();
        let layers: Vec<_> = m.crossbar_layers().collect();
        // 230 outputs -> 4 column blocks, positive and negative
        assert_eq!(layers[0].tile_count(), 8);
        assert_eq!(layers[1].tile_count(), 2);
        assert_eq!(m.tile_count(), 10);
    }

    #[test]
    fn row_partitioning_large_fan_in() {
        let net: NetworkSpec<f64> = Architecture::mlp("600-3").unwrap().build(4).unwrap();
        let calib = random_inputs(&[600], 16, 5);
        let m = convert_network(&net, &ideal_device(), &calib, &ConversionOptions::ideal()).unwrap();
        let l = m.crossbar_layers().next().unwrap();
        let rows: Vec<_> = l.partitions.iter().map(|p| (p.row_start, p.rows)).collect();
        assert_eq!(rows, vec![(0, 256), (256, 256), (512, 88)]);
        for x in &calib {
            let a = net.forward_logits(x).unwrap();
            let b = m.forward_logits(x).unwrap();
            for (p, q) in a.data().iter().zip(b.data()) {
                assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
            }
        }
    }

    #[test]
    fn ideal_conversion_matches_float_conv_net() {
        let arch = Architecture::single(
            crate::nn::BranchArch::parse("4c3-2p-6", &[1, 8, 8]).unwrap(),
        );
        let net: NetworkSpec<f64> = arch.build(3).unwrap();
        let calib = random_inputs(&[1, 8, 8], 20, 6);
        let m = convert_network(&net, &ideal_device(), &calib, &ConversionOptions::ideal()).unwrap();
        for x in &calib {
            let a = net.forward_logits(x).unwrap();
            let b = m.forward_logits(x).unwrap();
            let scale = a.max_abs();
            for (p, q) in a.data().iter().zip(b.data()) {
                assert!((p - q).abs() <= 1e-9 * scale, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn adc_option_serde() {
        let o: ConversionOptions = serde_json::from_str(r#"{"adc":"bypass"}"#).unwrap();
        assert_eq!(o, ConversionOptions::ideal());
        let o: ConversionOptions = serde_json::from_str(r#"{"adc":{"bits":6,"mode":"per_column"}}"#).unwrap();
        assert_eq!(o.adc, Some(AdcSettings { bits: 6, mode: AdcMode::PerColumn }));
        for o in [ConversionOptions::default(), ConversionOptions::ideal()] {
            let back: ConversionOptions = serde_json::from_str(&serde_json::to_string(&o).unwrap()).unwrap();
            assert_eq!(back, o);
        }
        assert!(serde_json::from_str::<ConversionOptions>(r#"{"adc":"off"}"#).is_err());
    }

    #[test]
    fn same_seed_same_tiles() {
        let net: NetworkSpec<f64> = Architecture::mlp("16-20-5").unwrap().build(1).unwrap();
        let calib = random_inputs(&[16], 8, 2);
        let dev = DeviceConfig {
            sigma: 200.0,
            seed: 11,
            ..DeviceConfig::default()
        };
        let opts = ConversionOptions::default();
        let a = convert_network(&net, &dev, &calib, &opts).unwrap();
        let b = convert_network(&net, &dev, &calib, &opts).unwrap();
        assert_eq!(a, b);
        let c = convert_network(&net, &DeviceConfig { seed: 12, ..dev }, &calib, &opts).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_empty_calibration_and_bad_options() {
        let net: NetworkSpec<f64> = Architecture::mlp("4-2").unwrap().build(1).unwrap();
        let dev = DeviceConfig::default();
        assert!(convert_network(&net, &dev, &[], &ConversionOptions::default()).is_err());
        let calib = random_inputs(&[4], 2, 1);
        let bad = ConversionOptions {
            tile_cols: 65,
            ..ConversionOptions::default()
        };
        assert!(convert_network(&net, &dev, &calib, &bad).is_err());
        let wrong = random_inputs(&[5], 2, 1);
        assert!(convert_network(&net, &dev, &wrong, &ConversionOptions::default()).is_err());
    }

    #[test]
    fn adc_modes_run_and_stay_close_at_high_resolution() {
        let net: NetworkSpec<f64> = Architecture::mlp("16-32-5").unwrap().build(7).unwrap();
        // per-column converters are unipolar, so keep the inputs non-negative
        let calib: Vec<Vec<Tensor<f64>>> = random_inputs(&[16], 32, 8)
            .into_iter()
            .map(|s| vec![s[0].map(f64::abs)])
            .collect();
        for mode in [AdcMode::PerPairDifferential, AdcMode::PerColumn] {
            let opts = ConversionOptions {
                adc: Some(AdcSettings { bits: 16, mode }),
                ..ConversionOptions::default()
            };
            let m = convert_network(&net, &ideal_device(), &calib, &opts).unwrap();
            let agree = calib
                .iter()
                .filter(|x| m.predict(x).unwrap() == net.predict(x).unwrap())
                .count();
            assert!(agree >= 30, "{mode:?}: {agree}/32");
        }
    }
}
