//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xbar_core::bench::{self, BenchNetwork, NtcContainer};
use xbar_core::fxp::{fx_quantize, FixedPointFormat};
use xbar_core::memsim::{crossbar_vmm, draw_raw, CrossbarTile, DeviceConfig};
use xbar_core::nn::{conv2d_via_vmm, grad_check, Architecture, BranchArch, Layer, LayerKind, NetworkSpec};
use xbar_core::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Valid, stride-1 convolution written as the textbook seven-loop sum.
pub fn direct_conv(x: &[f64], [c_in, h, w]: [usize; 3], wts: &[f64], bias: &[f64], c_out: usize, k: usize) -> Vec<f64> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut out = vec![0.0; c_out * oh * ow];
    for o in 0..c_out {
        for y in 0..oh {
            for xx in 0..ow {
                let mut acc = bias[o];
                for c in 0..c_in {
                    for dy in 0..k {
                        for dx in 0..k {
                            acc += wts[((o * c_in + c) * k + dy) * k + dx] * x[(c * h + y + dy) * w + xx + dx];
                        }
                    }
                }
                out[(o * oh + y) * ow + xx] = acc;
            }
        }
    }
    out
}

/// Worst `|im2col - direct| / max(1, |direct|)` over random conv instances.
pub fn conv_worst_error(instances: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..instances {
        let c_in = r.random_range(1..=4);
        let h = r.random_range(3..=12);
        let w = r.random_range(3..=12);
        let k = r.random_range(1..=h.min(w).min(5));
        let c_out = r.random_range(1..=6);
        let x: Vec<f64> = (0..c_in * h * w).map(|_| r.random_range(-2.0..2.0)).collect();
        let wts: Vec<f64> = (0..c_out * c_in * k * k).map(|_| r.random_range(-1.0..1.0)).collect();
        let bias: Vec<f64> = (0..c_out).map(|_| r.random_range(-0.5..0.5)).collect();
        let layer = Layer::conv2d(
            Tensor::new(vec![c_out, c_in, k, k], wts.clone()).unwrap(),
            Tensor::vector(bias.clone()),
        )
        .unwrap();
        let got = conv2d_via_vmm(&Tensor::new(vec![c_in, h, w], x.clone()).unwrap(), &layer).unwrap();
        let want = direct_conv(&x, [c_in, h, w], &wts, &bias, c_out, k);
        assert_eq!(got.shape(), &[c_out, h - k + 1, w - k + 1]);
        for (a, b) in got.data().iter().zip(&want) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    worst
}

/// Worst relative gap between `crossbar_vmm` and a column-by-column matvec.
pub fn vmm_worst_rel_error(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let rows = r.random_range(1..=256);
        let cols = r.random_range(1..=64);
        let n = rows * cols;
        let g_off: Vec<f64> = (0..n).map(|_| r.random_range(3e-4..5e-4)).collect();
        let g_on: Vec<f64> = (0..n).map(|_| r.random_range(8e-3..1.2e-2)).collect();
        let g: Vec<f64> = (0..n).map(|i| g_off[i] + r.random::<f64>() * (g_on[i] - g_off[i])).collect();
        let v: Vec<f64> = (0..rows).map(|_| r.random_range(-0.3..0.3)).collect();
        let t = |d: Vec<f64>| Tensor::new(vec![rows, cols], d).unwrap();
        let tile = CrossbarTile::new(t(g.clone()), t(g_on), t(g_off)).unwrap();
        let got = crossbar_vmm(&v, &tile).unwrap();
        for j in 0..cols {
            let mut want = 0.0;
            for i in 0..rows {
                want += v[i] * g[i * cols + j];
            }
            let scale: f64 = (0..rows).map(|i| (v[i] * g[i * cols + j]).abs()).sum();
            worst = worst.max((got[j] - want).abs() / scale.max(f64::MIN_POSITIVE));
        }
    }
    worst
}

/// Small random architecture: MLP, conv branch, or two fused branches.
pub fn random_arch(r: &mut ChaCha8Rng) -> Architecture {
    let mlp = |r: &mut ChaCha8Rng| {
        let depth = r.random_range(1..=3);
        let mut dims = vec![r.random_range(2..=6).to_string()];
        for _ in 0..depth {
            dims.push(r.random_range(2..=7).to_string());
        }
        BranchArch::mlp(&dims.join("-")).unwrap()
    };
    let conv = |r: &mut ChaCha8Rng| {
        let c = r.random_range(1..=3);
        let text = format!("{}c3-2p-{}", r.random_range(1..=3), r.random_range(2..=5));
        BranchArch::parse(&text, &[c, 6, 6]).unwrap()
    };
    match r.random_range(0..3) {
        0 => Architecture::single(mlp(r)),
        1 => Architecture::single(conv(r)),
        _ => Architecture::fused(mlp(r), conv(r), r.random_range(2..=5)),
    }
}

fn random_inputs(net: &NetworkSpec<f64>, r: &mut ChaCha8Rng) -> Vec<Tensor<f64>> {
    net.input_shapes
        .iter()
        .map(|s| {
            let n = s.iter().product();
            Tensor::new(s.clone(), (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
        })
        .collect()
}

/// Worst relative gradient error over `nets` random networks with random
/// (non-zero) biases.
pub fn grad_check_worst(nets: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..nets {
        let arch = random_arch(&mut r);
        let mut net: NetworkSpec<f64> = arch.build(seed + i as u64).unwrap();
        for l in net.weighted_layers_mut() {
            for b in l.bias.data_mut() {
                *b = r.random_range(-0.2..0.2);
            }
        }
        let x = random_inputs(&net, &mut r);
        let label = r.random_range(0..net.num_classes().unwrap());
        let report = grad_check(&net, &x, label, 1e-5).unwrap();
        assert!(report.parameters_checked > 0);
        worst = worst.max(report.max_rel_error);
    }
    worst
}

pub struct Moments {
    pub mean_on: f64,
    pub mean_off: f64,
    pub std_on: f64,
    pub std_off: f64,
}

/// Sample moments of `n` raw (pre-clamp) device draws.
pub fn device_moments(cfg: &DeviceConfig, n: usize, seed: u64) -> Moments {
    let mut r = rng(seed);
    let draws: Vec<_> = (0..n).map(|_| draw_raw(cfg, &mut r)).collect();
    let stats = |xs: Vec<f64>| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
        (m, v.sqrt())
    };
    let (mean_on, std_on) = stats(draws.iter().map(|d| d.r_on).collect());
    let (mean_off, std_off) = stats(draws.iter().map(|d| d.r_off).collect());
    Moments {
        mean_on,
        mean_off,
        std_on,
        std_off,
    }
}

/// Random container with arbitrary bit patterns (NaNs, infinities, signed zeros).
pub fn random_container(r: &mut ChaCha8Rng) -> NtcContainer {
    let mut c = NtcContainer::default();
    for t in 0..r.random_range(0..6) {
        let rank = r.random_range(0..4);
        let shape: Vec<usize> = (0..rank).map(|_| r.random_range(0..5)).collect();
        let n = shape.iter().product();
        let data = (0..n).map(|_| f32::from_bits(r.random())).collect();
        c.push(format!("t{t}"), Tensor::new(shape, data).unwrap());
    }
    c.metadata.insert("seed".into(), r.random::<u64>().to_string());
    c
}

pub fn bits_equal(a: &NtcContainer, b: &NtcContainer) -> bool {
    a.metadata == b.metadata
        && a.tensors.len() == b.tensors.len()
        && a.tensors.iter().zip(&b.tensors).all(|((na, ta), (nb, tb))| {
            na == nb
                && ta.shape() == tb.shape()
                && ta.data().iter().map(|v| v.to_bits()).eq(tb.data().iter().map(|v| v.to_bits()))
        })
}

/// Round-trips `cases` random containers through disk; true if all are bit-exact.
pub fn ntc_round_trips(cases: usize, seed: u64) -> bool {
    let mut r = rng(seed);
    let dir = tempfile::tempdir().unwrap();
    (0..cases).all(|i| {
        let c = random_container(&mut r);
        let path = dir.path().join(format!("c{i}"));
        bench::save_ntc(&c, &path).unwrap();
        bits_equal(&c, &bench::load_ntc(&path).unwrap())
    })
}

/// Worst `|q(w) - w| / 2^-(FL+1)` for in-range `w`; at most 1 if the bound holds.
pub fn fxp_worst_bound_ratio(samples: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let wl = r.random_range(2..=32);
        let fl = r.random_range(1..wl);
        let fmt = FixedPointFormat::new(wl, fl).unwrap();
        let lo = -(2f64.powi(wl as i32 - 1)) / 2f64.powi(fl as i32);
        let hi = (2f64.powi(wl as i32 - 1) - 1.0) / 2f64.powi(fl as i32);
        let w = r.random_range(lo..=hi);
        let err = (fx_quantize(w, &fmt) - w).abs();
        worst = worst.max(err / 2f64.powi(-(fl as i32) - 1));
    }
    worst
}

/// Dense layer shapes of a network's cost architecture, one entry per
/// physical copy, fusion head included.
pub fn dense_dims(network: BenchNetwork) -> Vec<(usize, usize)> {
    let arch = network.cost_architecture();
    let mut out = Vec::new();
    let mut concat = 0;
    for b in &arch.branches {
        for (kind, _) in b.layer_kinds().unwrap() {
            if let LayerKind::Dense { inputs, outputs } = kind {
                out.extend(std::iter::repeat_n((inputs, outputs), b.replicas));
            }
        }
        concat += b.output_width().unwrap() * b.replicas;
    }
    if let Some(w) = arch.fusion_width {
        out.push((concat, w));
    }
    out
}
