mod common;

use proptest::prelude::*;
use xbar_core::bench::{cv_folds_by_session, fx_accuracy_delta, gen_synthetic, train_folds, BenchNetwork};
use xbar_core::cost::{evaluate, tile_layout, CostGraph, CostParams};
use xbar_core::fxp::{fx_quantize, quantize_network, FixedPointFormat, FormatTable};
use xbar_core::memsim::AdcMode;
use xbar_core::nn::{LayerKind, TrainConfig};

fn q(wl: u32, fl: u32) -> FixedPointFormat {
    FixedPointFormat::new(wl, fl).unwrap()
}

#[test]
fn quantiser_examples() {
    let f = q(8, 6);
    assert_eq!(fx_quantize(0.013, &f), 1.0 / 64.0);
    assert_eq!(fx_quantize(5.0, &f), 1.984375);
    assert_eq!(fx_quantize(-5.0, &f), -2.0);
    // halfway between codes 0 and 1 rounds to the even code
    assert_eq!(fx_quantize(0.5 / 64.0, &f), 0.0);
    assert_eq!(fx_quantize(1.5 / 64.0, &f), 2.0 / 64.0);
    assert!(FixedPointFormat::new(8, 8).is_err());
    assert!(FixedPointFormat::new(33, 4).is_err());
}

#[test]
fn rounding_error_bound_holds() {
    assert!(common::fxp_worst_bound_ratio(100_000, 6) <= 1.0);
}

#[test]
fn fixed_point_accuracy_tracks_float() {
    let ds = gen_synthetic(20, 3).unwrap();
    let folds = cv_folds_by_session(&ds).unwrap();
    let n = BenchNetwork::MlpEmgB;
    let models = train_folds(n, &ds, &folds, &TrainConfig::default()).unwrap();

    let d = fx_accuracy_delta(n, &models, &FormatTable::default(), &ds, &folds).unwrap();
    assert!(d.delta.abs() <= 0.01, "{}", d.delta);
    let w = fx_accuracy_delta(n, &models, &FormatTable::weights_only(q(16, 13)), &ds, &folds).unwrap();
    assert!(w.delta.abs() <= 0.01, "{}", w.delta);

    let coarse = fx_accuracy_delta(n, &models, &FormatTable::weights_only(q(2, 1)), &ds, &folds).unwrap();
    assert!(coarse.delta > 0.0, "{}", coarse.delta);

    // weights already on the grid quantise to themselves
    let table = FormatTable::weights_only(q(8, 5));
    let on_grid: Vec<_> = models.iter().map(|m| quantize_network(m, &table).unwrap().net).collect();
    let same = fx_accuracy_delta(n, &on_grid, &table, &ds, &folds).unwrap();
    assert_eq!(same.delta, 0.0);
}

/// Closed form: every weighted layer costs one conversion window of its
/// ADCs plus its programmed cells at full current.
fn closed_form_energy(dims: &[(usize, usize)], p: &CostParams) -> f64 {
    let t = 1.0 / p.f_adc_bitserial;
    dims.iter()
        .map(|&(i, o)| {
            let partitions = i.div_ceil(p.tile_rows) as f64;
            let adcs = o as f64 * partitions;
            let cells = (i * 2 * o) as f64;
            t * (adcs * p.p_adc + cells * p.i_cell_max * p.v_read)
        })
        .sum()
}

#[test]
fn mlp_energy_matches_closed_form() {
    let p = CostParams::default();
    for n in [BenchNetwork::MlpEmgA, BenchNetwork::MlpEmgB, BenchNetwork::MlpAps, BenchNetwork::FusedMlp] {
        let r = evaluate(&CostGraph::from_architecture(&n.cost_architecture()).unwrap(), &p).unwrap();
        let want = closed_form_energy(&common::dense_dims(n), &p);
        assert!((r.energy_j - want).abs() <= 1e-12 * want, "{n}: {} vs {want}", r.energy_j);
    }
    let b = evaluate(&CostGraph::from_architecture(&BenchNetwork::MlpEmgB.cost_architecture()).unwrap(), &p).unwrap();
    // (235 ADCs * 0.2 mW + 9660 cells * 0.9 uW) * 200 ns
    assert!((b.energy_j - 1.11388e-8).abs() < 1e-12, "{}", b.energy_j);
    assert_eq!(b.cycles, 2);
}

#[test]
fn conv_tiling_and_area_examples() {
    let p = CostParams::default();
    let conv = LayerKind::Conv2d {
        in_channels: 1,
        out_channels: 8,
        kernel: 3,
    };
    let l = tile_layout(&conv, &[1, 32, 32], &p).unwrap();
    // 30x30 positions, each needing 8 signed columns
    assert_eq!((l.rows, l.dup_factor, l.physical_cols, l.tiles), (9, 900, 14_400, 225));
    assert_eq!(l.adc_count, 7200);

    let dense = LayerKind::Dense { inputs: 300, outputs: 40 };
    let l = tile_layout(&dense, &[300], &p).unwrap();
    assert_eq!((l.row_partitions, l.tiles, l.adc_count), (2, 4, 80));
    let per_col = CostParams {
        adc_mode: AdcMode::PerColumn,
        ..p.clone()
    };
    assert_eq!(tile_layout(&dense, &[300], &per_col).unwrap().adc_count, 160);

    let g = CostGraph::from_architecture(&BenchNetwork::MlpEmgB.cost_architecture()).unwrap();
    let r = evaluate(&g, &p).unwrap();
    let tile = 256.0 * 64.0 * 1.69e-7;
    // 16x460 needs 8 tiles, 230x10 needs 1
    let want = 9.0 * tile + 235.0 * 3e-3;
    assert!((r.area_mm2 - want).abs() < 1e-12, "{}", r.area_mm2);
    assert_eq!(r.tiles_total, 9);
}

proptest! {
    #[test]
    fn quantiser_is_monotone_and_idempotent(a in -300.0f64..300.0, b in -300.0f64..300.0, wl in 2u32..=24, fl_frac in 0.0f64..1.0) {
        let fl = 1 + ((wl - 2) as f64 * fl_frac) as u32;
        let f = q(wl, fl);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fx_quantize(lo, &f) <= fx_quantize(hi, &f));
        let once = fx_quantize(a, &f);
        prop_assert_eq!(fx_quantize(once, &f), once);
        prop_assert!(once >= f.min_value() && once <= f.max_value());
    }

    #[test]
    fn energy_scales_with_utilisation(u in 0.05f64..1.0) {
        let g = CostGraph::from_architecture(&BenchNetwork::CnnAps.cost_architecture()).unwrap();
        let full = evaluate(&g, &CostParams::default()).unwrap();
        let part = evaluate(&g, &CostParams { array_utilization: u, ..CostParams::default() }).unwrap();
        let cell_full: f64 = full.layers.iter().map(|l| l.cell_energy_j).sum();
        let want = full.energy_j - cell_full * (1.0 - u);
        prop_assert!((part.energy_j - want).abs() <= 1e-12 * want);
        prop_assert_eq!(part.latency_s, full.latency_s);
    }
}
