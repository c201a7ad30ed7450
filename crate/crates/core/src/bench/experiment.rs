//! Per-fold training and the device-variability sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::data::{Dataset, Modality};
use crate::bench::folds::{accuracy_on, mean_std, Fold, FoldResult};
use crate::bench::networks::BenchNetwork;
use crate::error::{Error, Result};
use crate::fxp::{quantize_network, FormatTable};
use crate::memsim::{convert_network, ConversionOptions, DeviceConfig, StateCount};
use crate::nn::{train_sgd, LabeledSet, NetworkSpec, TrainConfig};
use crate::tensor::Tensor;

/// Mixes a base seed with trial coordinates into an independent 64-bit seed.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut h = base ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h = splitmix(h ^ splitmix(p));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn network_id(n: BenchNetwork) -> u64 {
    BenchNetwork::ALL.iter().position(|&m| m == n).unwrap_or(0) as u64
}

pub fn labeled_set(ds: &Dataset<f64>, indices: &[usize], modality: Modality) -> LabeledSet<f64> {
    LabeledSet {
        inputs: indices.iter().map(|&i| ds.inputs(i, modality)).collect(),
        labels: indices.iter().map(|&i| ds.labels[i]).collect(),
    }
}

/// Trains one model per fold. Seeds derive from `cfg.seed`, the network and the fold.
pub fn train_folds(
    network: BenchNetwork,
    ds: &Dataset<f64>,
    folds: &[Fold],
    cfg: &TrainConfig,
) -> Result<Vec<NetworkSpec<f64>>> {
    cfg.validate()?;
    let arch = network.architecture();
    folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| {
            let seed = derive_seed(cfg.seed, &[network_id(network), k as u64]);
            let init: NetworkSpec<f64> = arch.build(seed)?;
            let data = labeled_set(ds, &fold.train, network.modality());
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            train_sgd(&init, &data, &fold_cfg).map(|(net, _)| net)
        })
        .collect()
}

/// Float accuracy of per-fold models.
pub fn float_accuracy(
    network: BenchNetwork,
    models: &[NetworkSpec<f64>],
    ds: &Dataset<f64>,
    folds: &[Fold],
) -> Result<FoldResult> {
    check_models(models, folds)?;
    let per_fold = models
        .iter()
        .zip(folds)
        .map(|(m, f)| accuracy_on(ds, &f.test, network.modality(), |x| m.predict(x)))
        .collect::<Result<Vec<_>>>()?;
    FoldResult::from_accuracies(per_fold)
}

fn check_models(models: &[NetworkSpec<f64>], folds: &[Fold]) -> Result<()> {
    if models.len() != folds.len() {
        return Err(Error::config(format!(
            "{} models for {} folds",
            models.len(),
            folds.len()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Template; `sigma` and `seed` are overwritten per trial.
    pub device: DeviceConfig,
    pub conversion: ConversionOptions,
    /// Training samples used to calibrate voltage scales and tuning.
    pub calibration_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sigmas: vec![0.0, 100.0, 200.0, 300.0, 400.0, 500.0],
            seeds: (0..10).collect(),
            device: DeviceConfig::default(),
            conversion: ConversionOptions::default(),
            calibration_samples: 64,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.seeds.is_empty() {
            return Err(Error::config("sweep needs at least one sigma and one seed"));
        }
        if self.sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::config("sigmas must be finite and >= 0"));
        }
        if self.calibration_samples < 1 {
            return Err(Error::config("calibration_samples must be >= 1"));
        }
        self.device.validate()?;
        self.conversion.validate()
    }
}

/// Accuracy of one mapped model: one (network, sigma, seed, fold) trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub network: BenchNetwork,
    pub sigma: f64,
    pub n_states: StateCount,
    pub seed: u64,
    pub fold: usize,
    pub accuracy: f64,
}

/// Evenly strided subset of `indices`, at most `n` long.
pub fn calibration_indices(indices: &[usize], n: usize) -> Vec<usize> {
    if indices.len() <= n {
        return indices.to_vec();
    }
    (0..n).map(|k| indices[k * indices.len() / n]).collect()
}

/// Calibration inputs for one fold, drawn from its training split.
pub fn calibration_set(ds: &Dataset<f64>, fold: &Fold, modality: Modality, n: usize) -> Vec<Vec<Tensor<f64>>> {
    calibration_indices(&fold.train, n)
        .into_iter()
        .map(|i| ds.inputs(i, modality))
        .collect()
}

/// Device settings of one trial: the template with `sigma` and a seed mixed
/// from (seed, network, fold).
pub fn trial_device(template: &DeviceConfig, network: BenchNetwork, sigma: f64, seed: u64, fold: usize) -> DeviceConfig {
    DeviceConfig {
        sigma,
        seed: derive_seed(seed, &[network_id(network), fold as u64]),
        ..template.clone()
    }
}

/// Converts and scores every (sigma, seed, fold) combination. Device draws
/// depend on (seed, network, fold) only, so every sigma sees the same
/// underlying random numbers. Rows come back sorted by (sigma, seed, fold).
pub fn run_sweep(
    network: BenchNetwork,
    models: &[NetworkSpec<f64>],
    ds: &Dataset<f64>,
    folds: &[Fold],
    cfg: &SweepConfig,
) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    check_models(models, folds)?;
    let modality = network.modality();
    let calib: Vec<Vec<Vec<Tensor<f64>>>> = folds
        .iter()
        .map(|f| calibration_set(ds, f, modality, cfg.calibration_samples))
        .collect();
    let mut jobs = Vec::new();
    for &sigma in &cfg.sigmas {
        for &seed in &cfg.seeds {
            for fold in 0..folds.len() {
                jobs.push((sigma, seed, fold));
            }
        }
    }
    let mut rows = jobs
        .into_par_iter()
        .map(|(sigma, seed, fold)| {
            let device = trial_device(&cfg.device, network, sigma, seed, fold);
            let mapped = convert_network(&models[fold], &device, &calib[fold], &cfg.conversion)?;
            let accuracy = accuracy_on(ds, &folds[fold].test, modality, |x| mapped.predict(x))?;
            Ok(TrialResult {
                network,
                sigma,
                n_states: cfg.device.n_states,
                seed,
                fold,
                accuracy,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.seed.cmp(&b.seed))
            .then(a.fold.cmp(&b.fold))
    });
    Ok(rows)
}

/// Mean 3-fold accuracy at one sigma, aggregated over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub network: BenchNetwork,
    pub sigma: f64,
    /// Mean over seeds of the per-seed fold mean.
    pub mean: f64,
    /// Sample standard deviation of the per-seed fold means.
    pub std: f64,
    /// `std / sqrt(seeds)`.
    pub stderr: f64,
    pub seeds: usize,
}

/// Groups trials by (network, sigma), averaging folds first and seeds second.
pub fn summarize(rows: &[TrialResult]) -> Vec<SweepPoint> {
    let mut keys: Vec<(BenchNetwork, f64)> = rows.iter().map(|r| (r.network, r.sigma)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(network, sigma)| {
            let mut seeds: Vec<u64> = rows
                .iter()
                .filter(|r| r.network == network && r.sigma == sigma)
                .map(|r| r.seed)
                .collect();
            seeds.sort_unstable();
            seeds.dedup();
            let per_seed: Vec<f64> = seeds
                .iter()
                .map(|&s| {
                    let accs: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.network == network && r.sigma == sigma && r.seed == s)
                        .map(|r| r.accuracy)
                        .collect();
                    mean_std(&accs).0
                })
                .collect();
            let (mean, std) = mean_std(&per_seed);
            SweepPoint {
                network,
                sigma,
                mean,
                std,
                stderr: std / (per_seed.len() as f64).sqrt(),
                seeds: per_seed.len(),
            }
        })
        .collect()
}

/// Degradation verdict for one network's sweep curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendVerdict {
    pub network: BenchNetwork,
    /// No step rises by more than one standard error.
    pub non_increasing: bool,
    /// Sigma pairs where the mean rose beyond one standard error.
    pub violations: Vec<(f64, f64)>,
    /// Accuracy lost from the smallest to the largest sigma, percentage points.
    pub drop_pp: f64,
}

/// `points` must belong to one network; they are ordered by sigma here.
pub fn trend_verdict(points: &[SweepPoint]) -> Result<TrendVerdict> {
    let Some(first) = points.first() else {
        return Err(Error::config("no sweep points to judge"));
    };
    if points.iter().any(|p| p.network != first.network) {
        return Err(Error::config("trend verdict needs points of a single network"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    let violations: Vec<(f64, f64)> = pts
        .windows(2)
        .filter(|w| w[1].mean - w[0].mean > w[0].stderr.max(w[1].stderr))
        .map(|w| (w[0].sigma, w[1].sigma))
        .collect();
    Ok(TrendVerdict {
        network: first.network,
        non_increasing: violations.is_empty(),
        violations,
        drop_pp: 100.0 * (pts[0].mean - pts[pts.len() - 1].mean),
    })
}

/// Float and fixed-point accuracy of the same per-fold models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyDelta {
    pub float: FoldResult,
    pub fixed: FoldResult,
    /// `float.mean - fixed.mean`
    pub delta: f64,
}

pub fn fx_accuracy_delta(
    network: BenchNetwork,
    models: &[NetworkSpec<f64>],
    formats: &FormatTable,
    ds: &Dataset<f64>,
    folds: &[Fold],
) -> Result<AccuracyDelta> {
    let float = float_accuracy(network, models, ds, folds)?;
    let per_fold = models
        .iter()
        .zip(folds)
        .map(|(m, f)| {
            let q = quantize_network(m, formats)?;
            accuracy_on(ds, &f.test, network.modality(), |x| q.predict(x))
        })
        .collect::<Result<Vec<_>>>()?;
    let fixed = FoldResult::from_accuracies(per_fold)?;
    Ok(AccuracyDelta {
        delta: float.mean - fixed.mean,
        float,
        fixed,
    })
}
