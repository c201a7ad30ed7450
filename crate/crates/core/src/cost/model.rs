//! Tile layout, latency, energy, EDP and area of a network on 256x64 tiles.
//!
//! Every weighted layer takes one bit-serial conversion cycle: dense layers
//! fire all columns at once and convolutions duplicate their kernels so that
//! every output position converts in the same cycle. Parallel branches
//! overlap, a fusion head adds its own depth on top.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::memsim::AdcMode;
use crate::nn::{layer_macs, Architecture, LayerKind, NetworkSpec};
use crate::scalar::Scalar;
use crate::cost::params::CostParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileLayout {
    pub rows: usize,
    /// Physical columns, sign doubling and duplication included.
    pub physical_cols: usize,
    pub dup_factor: usize,
    pub row_partitions: usize,
    pub tiles: usize,
    pub adc_count: usize,
}

impl TileLayout {
    /// Programmed cells (not tile capacity).
    pub fn cells(&self) -> usize {
        self.rows * self.physical_cols
    }
}

/// Crossbar footprint of one dense or conv layer.
pub fn tile_layout(kind: &LayerKind, input_shape: &[usize], params: &CostParams) -> Result<TileLayout> {
    let out = kind.output_shape(input_shape)?;
    let (rows, logical, dup) = match *kind {
        LayerKind::Dense { inputs, outputs } => (inputs, outputs, 1),
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => (in_channels * kernel * kernel, out_channels, out[1] * out[2]),
        _ => {
            return Err(Error::shape(format!(
                "only dense and conv layers occupy tiles, got {kind:?}"
            )))
        }
    };
    let physical_cols = 2 * logical * dup;
    let row_partitions = rows.div_ceil(params.tile_rows);
    let tiles = row_partitions * physical_cols.div_ceil(params.tile_cols);
    let per_partition = match params.adc_mode {
        AdcMode::PerPairDifferential => physical_cols / 2,
        AdcMode::PerColumn => physical_cols,
    };
    Ok(TileLayout {
        rows,
        physical_cols,
        dup_factor: dup,
        row_partitions,
        tiles,
        adc_count: per_partition * row_partitions,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLayer {
    pub kind: LayerKind,
    pub input_shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostBranch {
    /// Identical copies running side by side; they add hardware, not time.
    pub replicas: usize,
    pub layers: Vec<CostLayer>,
}

impl CostBranch {
    fn weighted_depth(&self) -> usize {
        self.layers.iter().filter(|l| l.kind.is_weighted()).count()
    }
}

/// Shape-annotated layer graph used for costing. Weights are irrelevant here.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostGraph {
    pub branches: Vec<CostBranch>,
    pub head: Vec<CostLayer>,
}

impl CostGraph {
    pub fn from_architecture(arch: &Architecture) -> Result<Self> {
        let mut branches = Vec::with_capacity(arch.branches.len());
        let mut concat = 0;
        for b in &arch.branches {
            let layers = b
                .layer_kinds()?
                .into_iter()
                .map(|(kind, input_shape)| CostLayer { kind, input_shape })
                .collect();
            concat += b.output_width()? * b.replicas;
            branches.push(CostBranch {
                replicas: b.replicas,
                layers,
            });
        }
        let head = match arch.fusion_width {
            Some(w) => vec![CostLayer {
                kind: LayerKind::Dense {
                    inputs: concat,
                    outputs: w,
                },
                input_shape: vec![concat],
            }],
            None => Vec::new(),
        };
        Ok(CostGraph { branches, head })
    }

    pub fn from_network<T: Scalar>(net: &NetworkSpec<T>) -> Result<Self> {
        net.validate()?;
        let trace = |layers: &[crate::nn::Layer<T>], start: Vec<usize>| -> Result<Vec<CostLayer>> {
            let mut shape = start;
            let mut out = Vec::new();
            for l in layers {
                let next = l.kind.output_shape(&shape)?;
                if matches!(l.kind, LayerKind::Dense { .. } | LayerKind::Conv2d { .. } | LayerKind::MaxPool { .. }) {
                    out.push(CostLayer {
                        kind: l.kind,
                        input_shape: shape,
                    });
                }
                shape = next;
            }
            Ok(out)
        };
        let mut branches = Vec::new();
        for (layers, shape) in net.branches.iter().zip(&net.input_shapes) {
            branches.push(CostBranch {
                replicas: 1,
                layers: trace(layers, shape.clone())?,
            });
        }
        let head = match &net.fusion_head {
            Some(h) => {
                let width = net.branch_output_shapes()?.iter().map(|s| s.iter().product::<usize>()).sum();
                trace(h, vec![width])?
            }
            None => Vec::new(),
        };
        Ok(CostGraph { branches, head })
    }

    /// Conversion cycles of one inference: deepest branch plus the head.
    pub fn cycles(&self) -> u64 {
        let deepest = self.branches.iter().map(CostBranch::weighted_depth).max().unwrap_or(0);
        let head = self.head.iter().filter(|l| l.kind.is_weighted()).count();
        (deepest + head) as u64
    }

    fn weighted(&self) -> impl Iterator<Item = (String, usize, &CostLayer)> {
        let branch = self.branches.iter().enumerate().flat_map(|(b, br)| {
            br.layers
                .iter()
                .enumerate()
                .map(move |(i, l)| (format!("branch{b}.{i}"), br.replicas, l))
        });
        let head = self
            .head
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("head.{i}"), 1, l));
        branch.chain(head).filter(|(_, _, l)| l.kind.is_weighted())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub location: String,
    pub layer: String,
    pub replicas: usize,
    pub macs: u64,
    pub tiles: usize,
    pub dup_factor: usize,
    pub adc_count: usize,
    pub cells: usize,
    pub adc_energy_j: f64,
    pub cell_energy_j: f64,
    pub area_mm2: f64,
}

impl LayerCost {
    pub fn energy_j(&self) -> f64 {
        self.adc_energy_j + self.cell_energy_j
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub cycles: u64,
    pub latency_s: f64,
    pub energy_j: f64,
    pub edp_js: f64,
    pub tiles_total: usize,
    pub adc_count: usize,
    pub area_mm2: f64,
    pub macs: u64,
    pub layers: Vec<LayerCost>,
}

/// Short human-readable layer label (`dense 16->230`, `conv 1->8 k3`).
pub fn describe(kind: &LayerKind) -> String {
    match *kind {
        LayerKind::Dense { inputs, outputs } => format!("dense {inputs}->{outputs}"),
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => format!("conv {in_channels}->{out_channels} k{kernel}"),
        LayerKind::MaxPool { size } => format!("maxpool {size}"),
        LayerKind::Relu => "relu".into(),
        LayerKind::Softmax => "softmax".into(),
    }
}

pub fn latency(graph: &CostGraph, params: &CostParams) -> f64 {
    graph.cycles() as f64 * params.t_conv()
}

pub fn edp(energy_j: f64, latency_s: f64) -> f64 {
    energy_j * latency_s
}

pub fn energy(graph: &CostGraph, params: &CostParams) -> Result<f64> {
    Ok(evaluate(graph, params)?.energy_j)
}

pub fn area(graph: &CostGraph, params: &CostParams) -> Result<f64> {
    Ok(evaluate(graph, params)?.area_mm2)
}

/// Full cost report with a per-layer breakdown.
pub fn evaluate(graph: &CostGraph, params: &CostParams) -> Result<CostReport> {
    params.validate()?;
    let t = params.t_conv();
    let mut layers = Vec::new();
    for (location, replicas, l) in graph.weighted() {
        let lay = tile_layout(&l.kind, &l.input_shape, params)?;
        let r = replicas as f64;
        let adc_energy_j = r * lay.adc_count as f64 * params.p_adc * t;
        let cell_energy_j = r
            * lay.cells() as f64
            * params.i_cell_max
            * params.v_read
            * t
            * params.array_utilization;
        let area_mm2 = r * (lay.tiles as f64 * params.tile_cell_area() + lay.adc_count as f64 * params.a_adc);
        layers.push(LayerCost {
            location,
            layer: describe(&l.kind),
            replicas,
            macs: layer_macs(&l.kind, &l.input_shape)? * replicas as u64,
            tiles: lay.tiles * replicas,
            dup_factor: lay.dup_factor,
            adc_count: lay.adc_count * replicas,
            cells: lay.cells() * replicas,
            adc_energy_j,
            cell_energy_j,
            area_mm2,
        });
    }
    let energy_j = layers.iter().map(LayerCost::energy_j).sum();
    let latency_s = latency(graph, params);
    Ok(CostReport {
        cycles: graph.cycles(),
        latency_s,
        energy_j,
        edp_js: edp(energy_j, latency_s),
        tiles_total: layers.iter().map(|l| l.tiles).sum(),
        adc_count: layers.iter().map(|l| l.adc_count).sum(),
        area_mm2: layers.iter().map(|l| l.area_mm2).sum(),
        macs: layers.iter().map(|l| l.macs).sum(),
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::BranchArch;

    fn dense(i: usize, o: usize) -> LayerKind {
        LayerKind::Dense {
            inputs: i,
            outputs: o,
        }
    }

    #[test]
    fn dense_layouts() {
        let p = CostParams::default();
        let a = tile_layout(&dense(16, 230), &[16], &p).unwrap();
        assert_eq!((a.tiles, a.dup_factor, a.adc_count, a.physical_cols), (8, 1, 230, 460));
        let b = tile_layout(&dense(230, 5), &[230], &p).unwrap();
        assert_eq!((b.tiles, b.adc_count), (1, 5));
        let c = tile_layout(&dense(600, 10), &[600], &p).unwrap();
        assert_eq!((c.row_partitions, c.tiles, c.adc_count), (3, 3, 30));
    }

    #[test]
    fn conv_layout_duplicates_per_position() {
        let p = CostParams::default();
        let k = LayerKind::Conv2d {
            in_channels: 1,
            out_channels: 8,
            kernel: 3,
        };
        let l = tile_layout(&k, &[1, 32, 32], &p).unwrap();
        assert_eq!((l.dup_factor, l.physical_cols, l.tiles), (900, 14400, 225));
        assert!(tile_layout(&LayerKind::Relu, &[4], &p).is_err());
    }

    #[test]
    fn per_column_doubles_adcs() {
        let mut p = CostParams::default();
        let pair = tile_layout(&dense(16, 230), &[16], &p).unwrap();
        p.adc_mode = AdcMode::PerColumn;
        let col = tile_layout(&dense(16, 230), &[16], &p).unwrap();
        assert_eq!(col.adc_count, 2 * pair.adc_count);
    }

    #[test]
    fn empty_graph_costs_nothing() {
        let g = CostGraph {
            branches: vec![],
            head: vec![],
        };
        let r = evaluate(&g, &CostParams::default()).unwrap();
        assert_eq!((r.energy_j, r.area_mm2, r.latency_s, r.edp_js), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn graph_from_network_matches_architecture() {
        let arch = Architecture::single(BranchArch::parse("8c3-2p-16c3-2p-32c3-512-5", &[1, 32, 32]).unwrap());
        let net: NetworkSpec<f32> = arch.build(0).unwrap();
        let a = evaluate(&CostGraph::from_architecture(&arch).unwrap(), &CostParams::default()).unwrap();
        let b = evaluate(&CostGraph::from_network(&net).unwrap(), &CostParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.macs, net.count_macs().unwrap());
    }

    #[test]
    fn replicas_add_hardware_not_time() {
        let one = Architecture::mlp("400-210-5").unwrap();
        let four = Architecture::mlp("4x400-210-5").unwrap();
        let p = CostParams::default();
        let a = evaluate(&CostGraph::from_architecture(&one).unwrap(), &p).unwrap();
        let b = evaluate(&CostGraph::from_architecture(&four).unwrap(), &p).unwrap();
        assert_eq!(a.cycles, b.cycles);
        assert_eq!(b.tiles_total, 4 * a.tiles_total);
        assert!((b.energy_j - 4.0 * a.energy_j).abs() <= 1e-12 * b.energy_j);
    }
}
