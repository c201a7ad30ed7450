//! Report rows, cost comparison against published figures and plot data.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bench::data::Modality;
use crate::bench::experiment::{SweepPoint, TrialResult};
use crate::bench::networks::BenchNetwork;
use crate::cost::{evaluate, published, CostGraph, CostParams, CostReport};
use crate::error::{Error, Result};
use crate::memsim::StateCount;

/// Model cost of a benchmark network in its published form.
pub fn network_cost(network: BenchNetwork, params: &CostParams) -> Result<CostReport> {
    evaluate(&CostGraph::from_architecture(&network.cost_architecture())?, params)
}

/// One (network, sigma, seed, fold) trial joined with the network's cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub network: BenchNetwork,
    pub modality: Modality,
    pub sigma: f64,
    pub n_states: StateCount,
    pub fold: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub energy_j: f64,
    pub latency_s: f64,
    pub edp_js: f64,
}

impl ReportRow {
    pub fn new(trial: &TrialResult, cost: &CostReport) -> Result<Self> {
        if !(0.0..=1.0).contains(&trial.accuracy) {
            return Err(Error::NumericFault(format!("accuracy {} outside [0, 1]", trial.accuracy)));
        }
        Ok(ReportRow {
            network: trial.network,
            modality: trial.network.modality(),
            sigma: trial.sigma,
            n_states: trial.n_states,
            fold: trial.fold,
            seed: trial.seed,
            accuracy: trial.accuracy,
            energy_j: cost.energy_j,
            latency_s: cost.latency_s,
            edp_js: cost.energy_j * cost.latency_s,
        })
    }

    pub fn trial(&self) -> TrialResult {
        TrialResult {
            network: self.network,
            sigma: self.sigma,
            n_states: self.n_states,
            seed: self.seed,
            fold: self.fold,
            accuracy: self.accuracy,
        }
    }
}

/// Sorts by (network, sigma, seed, fold), the canonical output order.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        a.network
            .cmp(&b.network)
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.seed.cmp(&b.seed))
            .then(a.fold.cmp(&b.fold))
    });
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    network: String,
    modality: String,
    sigma: f64,
    n_states: String,
    fold: usize,
    seed: u64,
    accuracy: f64,
    energy_j: f64,
    latency_s: f64,
    edp_js: f64,
}

pub fn rows_to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(CsvRow {
            network: r.network.to_string(),
            modality: r.modality.to_string(),
            sigma: r.sigma,
            n_states: r.n_states.to_string(),
            fold: r.fold,
            seed: r.seed,
            accuracy: r.accuracy,
            energy_j: r.energy_j,
            latency_s: r.latency_s,
            edp_js: r.edp_js,
        })
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::config(e.to_string()))
}

/// Parses CSV written by [`rows_to_csv`], checking the EDP identity and the
/// accuracy range of every row.
pub fn rows_from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, rec) in rd.deserialize::<CsvRow>().enumerate() {
        let r = rec.map_err(csv_err)?;
        let row = ReportRow {
            network: r.network.parse()?,
            modality: r.modality.parse()?,
            sigma: r.sigma,
            n_states: r.n_states.parse()?,
            fold: r.fold,
            seed: r.seed,
            accuracy: r.accuracy,
            energy_j: r.energy_j,
            latency_s: r.latency_s,
            edp_js: r.edp_js,
        };
        if !(0.0..=1.0).contains(&row.accuracy) || row.edp_js != row.energy_j * row.latency_s {
            return Err(Error::config(format!("report row {} is inconsistent", line + 1)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_err(e: csv::Error) -> Error {
    Error::config(format!("csv: {e}"))
}

/// Two accuracy columns per network curve: `sigma`, `mean_accuracy`, with the
/// seed standard deviation as a third column for error bars.
pub fn plot_tsv(points: &[SweepPoint]) -> String {
    let mut out = String::from("sigma\tmean_accuracy\tstd\n");
    for p in points {
        let _ = writeln!(out, "{}\t{:.6}\t{:.6}", p.sigma, p.mean, p.std);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flag {
    Match,
    Mismatch,
    WithinBand,
    OutOfBand,
}

impl std::fmt::Display for Flag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Flag::Match => "MATCH",
            Flag::Mismatch => "MISMATCH",
            Flag::WithinBand => "WITHIN_BAND",
            Flag::OutOfBand => "OUT_OF_BAND",
        })
    }
}

/// Energy ratio band `[lo, hi]` accepted for a network. Convolutional
/// networks depend on an unstated input resolution, so their band is wider.
pub fn energy_band(network: BenchNetwork) -> (f64, f64) {
    match network {
        BenchNetwork::CnnAps | BenchNetwork::FusedCnn => (0.1, 10.0),
        _ => (0.2, 5.0),
    }
}

/// Model cost set against the published memristive row of one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostComparison {
    pub network: BenchNetwork,
    pub cycles: u64,
    pub published_cycles: u64,
    pub latency_s: f64,
    pub published_latency_s: f64,
    pub latency_flag: Flag,
    pub energy_j: f64,
    pub published_energy_j: f64,
    /// model / published
    pub energy_ratio: f64,
    pub energy_flag: Flag,
    pub edp_js: f64,
    pub published_edp_js: f64,
    /// Product of the published energy and time, J*s.
    pub published_product_js: f64,
    pub tiles: usize,
    pub adc_count: usize,
    pub area_mm2: f64,
    pub source: String,
}

/// Latency is compared in whole conversion cycles so float formatting of the
/// published milliseconds cannot cause spurious mismatches.
pub fn compare_cost(network: BenchNetwork, params: &CostParams) -> Result<CostComparison> {
    let report = network_cost(network, params)?;
    let row = published::memristive(network.name())
        .ok_or_else(|| Error::config(format!("no published row for {network}")))?;
    let published_cycles = (row.time_s() / params.t_conv()).round() as u64;
    let ratio = report.energy_j / row.energy_j();
    let (lo, hi) = energy_band(network);
    Ok(CostComparison {
        network,
        cycles: report.cycles,
        published_cycles,
        latency_s: report.latency_s,
        published_latency_s: row.time_s(),
        latency_flag: if report.cycles == published_cycles { Flag::Match } else { Flag::Mismatch },
        energy_j: report.energy_j,
        published_energy_j: row.energy_j(),
        energy_ratio: ratio,
        energy_flag: if (lo..=hi).contains(&ratio) { Flag::WithinBand } else { Flag::OutOfBand },
        edp_js: report.edp_js,
        published_edp_js: row.edp_ujs * 1e-6,
        published_product_js: row.energy_j() * row.time_s(),
        tiles: report.tiles_total,
        adc_count: report.adc_count,
        area_mm2: report.area_mm2,
        source: row.source.to_string(),
    })
}

pub fn compare_all(params: &CostParams) -> Result<Vec<CostComparison>> {
    BenchNetwork::ALL.iter().map(|&n| compare_cost(n, params)).collect()
}

/// Fixed-width text table of cost comparisons.
pub fn format_cost_table(rows: &[CostComparison]) -> String {
    let mut out = format!(
        "{:<10} {:>11} {:>11} {:<8} {:>10} {:>10} {:>7} {:<11} {:>10} {:>6}\n",
        "network", "latency_ms", "ref_ms", "latency", "energy_uJ", "ref_uJ", "ratio", "energy", "area_mm2", "tiles"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>11.3e} {:>11.3e} {:<8} {:>10.4} {:>10.4} {:>7.3} {:<11} {:>10.3} {:>6}",
            r.network.name(),
            r.latency_s * 1e3,
            r.published_latency_s * 1e3,
            r.latency_flag,
            r.energy_j * 1e6,
            r.published_energy_j * 1e6,
            r.energy_ratio,
            r.energy_flag,
            r.area_mm2,
            r.tiles
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(network: BenchNetwork, sigma: f64, seed: u64, fold: usize) -> TrialResult {
        TrialResult {
            network,
            sigma,
            n_states: StateCount::Finite(256),
            seed,
            fold,
            accuracy: 0.75,
        }
    }

    #[test]
    fn csv_round_trip_and_order() {
        let params = CostParams::default();
        let mut rows: Vec<ReportRow> = [
            trial(BenchNetwork::CnnAps, 100.0, 0, 1),
            trial(BenchNetwork::MlpEmgA, 100.0, 1, 0),
            trial(BenchNetwork::MlpEmgA, 0.0, 2, 2),
            trial(BenchNetwork::MlpEmgA, 100.0, 0, 2),
        ]
        .iter()
        .map(|t| ReportRow::new(t, &network_cost(t.network, &params).unwrap()).unwrap())
        .collect();
        sort_rows(&mut rows);
        let keys: Vec<_> = rows.iter().map(|r| (r.network, r.sigma, r.seed, r.fold)).collect();
        assert_eq!(
            keys,
            vec![
                (BenchNetwork::MlpEmgA, 0.0, 2, 2),
                (BenchNetwork::MlpEmgA, 100.0, 0, 2),
                (BenchNetwork::MlpEmgA, 100.0, 1, 0),
                (BenchNetwork::CnnAps, 100.0, 0, 1),
            ]
        );
        let text = rows_to_csv(&rows).unwrap();
        assert!(text.starts_with("network,modality,sigma,n_states,fold,seed,accuracy,energy_j,latency_s,edp_js\n"));
        assert_eq!(rows_from_csv(&text).unwrap(), rows);
    }

    #[test]
    fn tampered_edp_rejected() {
        let params = CostParams::default();
        let t = trial(BenchNetwork::MlpEmgB, 0.0, 0, 0);
        let mut r = ReportRow::new(&t, &network_cost(t.network, &params).unwrap()).unwrap();
        r.edp_js *= 1.5;
        assert!(rows_from_csv(&rows_to_csv(&[r]).unwrap()).is_err());
    }

    #[test]
    fn out_of_range_accuracy_is_a_numeric_fault() {
        let mut t = trial(BenchNetwork::MlpEmgB, 0.0, 0, 0);
        t.accuracy = 1.2;
        let cost = network_cost(t.network, &CostParams::default()).unwrap();
        assert!(matches!(ReportRow::new(&t, &cost), Err(Error::NumericFault(_))));
    }

    #[test]
    fn comparison_flags() {
        let rows = compare_all(&CostParams::default()).unwrap();
        assert!(rows.iter().all(|r| r.latency_flag == Flag::Match));
        let table = format_cost_table(&rows);
        assert_eq!(table.lines().count(), 7);
        assert!(table.contains("mlp_emg_a") && table.contains("MATCH"));
    }
}
