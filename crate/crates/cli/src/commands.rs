use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use xbar_core::bench::{
    self, calibration_set, compare_all, cv_folds_by_session, dataset_from_ntc, dataset_to_ntc, float_accuracy,
    format_cost_table, fx_accuracy_delta, gen_synthetic_with, load_ntc, mapped_to_ntc, network_cost,
    network_from_ntc, network_to_ntc, plot_tsv, rows_from_csv, rows_to_csv, run_sweep, save_ntc, sort_rows,
    summarize, train_folds, trend_verdict, trial_device, BenchNetwork, Dataset, Fold, ReportRow,
};
use xbar_core::cost::describe;
use xbar_core::memsim::convert_network;
use xbar_core::nn::NetworkSpec;

use crate::config::RunConfig;
use crate::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub out_dir: PathBuf,
}

impl Context {
    fn data_dir(&self) -> PathBuf {
        self.out_dir.join("data")
    }

    fn model_dir(&self, network: BenchNetwork, fold: usize) -> PathBuf {
        self.out_dir.join("models").join(network.name()).join(format!("fold{fold}"))
    }

    fn sweep_csv(&self) -> PathBuf {
        self.out_dir.join("sweep.csv")
    }

    fn load_dataset(&self) -> Result<(Dataset<f64>, Vec<Fold>), CliError> {
        let dir = self.data_dir();
        let c = load_artifact(&dir, "dataset", "gen-data")?;
        let ds = dataset_from_ntc(&c)?;
        let folds = cv_folds_by_session(&ds)?;
        Ok((ds, folds))
    }

    fn load_models(&self, network: BenchNetwork, folds: usize) -> Result<Vec<NetworkSpec<f64>>, CliError> {
        (0..folds)
            .map(|k| {
                let dir = self.model_dir(network, k);
                let c = load_artifact(&dir, &format!("{network} fold {k} model"), "train")?;
                let (arch, net) = network_from_ntc::<f64>(&c)
                    .map_err(|e| CliError::Missing(format!("{}: {e}", dir.display())))?;
                if arch != network.architecture() {
                    return Err(CliError::Missing(format!(
                        "{} holds `{arch}`, expected `{}` for {network}",
                        dir.display(),
                        network.architecture()
                    )));
                }
                Ok(net)
            })
            .collect()
    }
}

fn load_artifact(dir: &Path, what: &str, producer: &str) -> Result<bench::NtcContainer, CliError> {
    let manifest = dir.join(bench::ntc::MANIFEST_FILE);
    if !manifest.is_file() {
        return Err(CliError::Missing(format!(
            "{what} not found: expected {}; run `xbar-bench {producer}` first",
            manifest.display()
        )));
    }
    load_ntc(dir).map_err(|e| CliError::Missing(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).map_err(|e| CliError::Other(format!("cannot write {}: {e}", path.display())))
}

pub fn gen_data(ctx: &Context) -> Result<(), CliError> {
    let ds = gen_synthetic_with(&ctx.cfg.data)?;
    let mut c = dataset_to_ntc(&ds);
    c.metadata.insert(
        "generator".into(),
        serde_json::to_string(&ctx.cfg.data).map_err(|e| CliError::Other(e.to_string()))?,
    );
    save_ntc(&c, &ctx.data_dir())?;
    let csv_path = ctx.out_dir.join("data.csv");
    let file = fs::File::create(&csv_path)?;
    ds.write_csv(std::io::BufWriter::new(file))?;
    println!("wrote {} samples to {} and {}", ds.len(), ctx.data_dir().display(), csv_path.display());
    Ok(())
}

pub fn train(ctx: &Context) -> Result<(), CliError> {
    let (ds, folds) = ctx.load_dataset()?;
    let mut log = Vec::new();
    for &network in &ctx.cfg.networks {
        let trained = train_folds(network, &ds, &folds, &ctx.cfg.train)?;
        let arch = network.architecture();
        for (k, net) in trained.iter().enumerate() {
            save_ntc(&network_to_ntc(&arch, net)?, &ctx.model_dir(network, k))?;
        }
        // score what was written, so later commands see the same numbers
        let models = ctx.load_models(network, folds.len())?;
        let fx = fx_accuracy_delta(network, &models, &ctx.cfg.fxp, &ds, &folds)?;
        println!(
            "{network:<10} float {:.4} +/- {:.4}   fixed {:.4} +/- {:.4}   delta {:+.4}",
            fx.float.mean, fx.float.std, fx.fixed.mean, fx.fixed.std, fx.delta
        );
        log.push(json!({
            "network": network,
            "architecture": arch.to_string(),
            "float": fx.float,
            "fixed": fx.fixed,
            "delta": fx.delta,
        }));
    }
    write_json(
        &ctx.out_dir.join("train_log.json"),
        &json!({ "train": ctx.cfg.train, "fxp": ctx.cfg.fxp, "networks": log }),
    )
}

pub fn convert(ctx: &Context) -> Result<(), CliError> {
    let (ds, folds) = ctx.load_dataset()?;
    let sweep = &ctx.cfg.sweep;
    let seed = sweep.seeds[0];
    let sigma = sweep.device.sigma;
    for &network in &ctx.cfg.networks {
        let models = ctx.load_models(network, folds.len())?;
        let mut per_fold = Vec::new();
        for (k, (model, fold)) in models.iter().zip(&folds).enumerate() {
            let device = trial_device(&sweep.device, network, sigma, seed, k);
            let calib = calibration_set(&ds, fold, network.modality(), sweep.calibration_samples);
            let mapped = convert_network(model, &device, &calib, &sweep.conversion)?;
            let layers: Vec<_> = mapped
                .crossbar_layers()
                .map(|l| {
                    json!({
                        "layer": describe(&l.kind),
                        "rows": l.rows,
                        "outputs": l.outputs,
                        "row_partitions": l.partitions.len(),
                        "tiles": l.tile_count(),
                        "clipped_weights": l.clipped_weights,
                        "scale_k": l.scale_k,
                        "input_scale": l.input_scale,
                        "tuning_a": l.tuning.a,
                        "tuning_b": l.tuning.b,
                        "tuning_degenerate": l.tuning.degenerate,
                    })
                })
                .collect();
            let clipped: usize = mapped.crossbar_layers().map(|l| l.clipped_weights).sum();
            println!(
                "{network:<10} fold {k}: {} tiles, {clipped} clipped weights",
                mapped.tile_count()
            );
            if k == 0 {
                save_ntc(
                    &mapped_to_ntc(&mapped)?,
                    &ctx.out_dir.join("convert").join(network.name()).join("fold0"),
                )?;
            }
            per_fold.push(json!({ "fold": k, "tiles": mapped.tile_count(), "layers": layers }));
        }
        write_json(
            &ctx.out_dir.join("convert").join(format!("{network}.json")),
            &json!({ "network": network, "sigma": sigma, "seed": seed, "device": sweep.device, "folds": per_fold }),
        )?;
    }
    Ok(())
}

pub fn sweep(ctx: &Context) -> Result<(), CliError> {
    let (ds, folds) = ctx.load_dataset()?;
    let mut rows = Vec::new();
    for &network in &ctx.cfg.networks {
        let models = ctx.load_models(network, folds.len())?;
        let baseline = float_accuracy(network, &models, &ds, &folds)?;
        let trials = run_sweep(network, &models, &ds, &folds, &ctx.cfg.sweep)?;
        let cost = network_cost(network, &ctx.cfg.cost)?;
        for t in &trials {
            rows.push(ReportRow::new(t, &cost)?);
        }
        eprintln!(
            "{network}: {} trials, float baseline {:.4}",
            trials.len(),
            baseline.mean
        );
    }
    sort_rows(&mut rows);
    write_text(&ctx.sweep_csv(), &rows_to_csv(&rows)?)?;
    write_json(&ctx.out_dir.join("sweep.json"), &rows)?;
    println!("wrote {} rows to {}", rows.len(), ctx.sweep_csv().display());
    Ok(())
}

pub fn cost(ctx: &Context) -> Result<(), CliError> {
    let table: Vec<_> = compare_all(&ctx.cfg.cost)?
        .into_iter()
        .filter(|c| ctx.cfg.networks.contains(&c.network))
        .collect();
    let mut breakdown = Vec::new();
    for &network in &ctx.cfg.networks {
        breakdown.push(json!({ "network": network, "report": network_cost(network, &ctx.cfg.cost)? }));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &table {
        w.serialize(c).map_err(|e| CliError::Other(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Other(e.to_string()))?;
    write_text(&ctx.out_dir.join("cost.csv"), &String::from_utf8_lossy(&bytes))?;
    write_json(
        &ctx.out_dir.join("cost.json"),
        &json!({ "params": ctx.cfg.cost, "comparison": table, "breakdown": breakdown }),
    )?;
    print!("{}", format_cost_table(&table));
    Ok(())
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let path = ctx.sweep_csv();
    let text = fs::read_to_string(&path).map_err(|_| {
        CliError::Missing(format!(
            "sweep results not found: expected {}; run `xbar-bench sweep` first",
            path.display()
        ))
    })?;
    let rows = rows_from_csv(&text).map_err(|e| CliError::Missing(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Missing(format!("{} contains no rows", path.display())));
    }
    let trials: Vec<_> = rows.iter().map(ReportRow::trial).collect();
    let points = summarize(&trials);
    let mut networks: Vec<BenchNetwork> = points.iter().map(|p| p.network).collect();
    networks.dedup();

    let mut out = format!("{:<10} {:>6} {:>8} {:>8} {:>8} {:>5}\n", "network", "sigma", "mean", "std", "stderr", "seeds");
    let mut verdicts = Vec::new();
    for &network in &networks {
        let pts: Vec<_> = points.iter().filter(|p| p.network == network).cloned().collect();
        for p in &pts {
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>5}",
                network.name(),
                p.sigma,
                p.mean,
                p.std,
                p.stderr,
                p.seeds
            );
        }
        write_text(&ctx.out_dir.join("plot").join(format!("{network}.tsv")), &plot_tsv(&pts))?;
        verdicts.push(trend_verdict(&pts)?);
    }
    out.push('\n');
    for v in &verdicts {
        let _ = writeln!(
            out,
            "trend {:<10} {}  drop {:.1} pp{}",
            v.network.name(),
            if v.non_increasing { "NON_INCREASING" } else { "RISES" },
            v.drop_pp,
            if v.violations.is_empty() {
                String::new()
            } else {
                format!("  rises at {:?}", v.violations)
            }
        );
    }
    write_text(&ctx.out_dir.join("report.txt"), &out)?;
    write_json(
        &ctx.out_dir.join("summary.json"),
        &json!({ "points": points, "verdicts": verdicts }),
    )?;
    print!("{out}");
    Ok(())
}
