//! Synthetic benchmark data, session-grouped cross-validation, the tensor
//! container format and the variability sweep harness.

pub mod data;
pub mod experiment;
pub mod folds;
pub mod networks;
pub mod ntc;
pub mod report;

pub use data::{gen_synthetic, gen_synthetic_with, Dataset, Modality, SyntheticConfig};
pub use experiment::{
    calibration_indices, calibration_set, derive_seed, labeled_set, float_accuracy, trial_device, fx_accuracy_delta, run_sweep, summarize, train_folds,
    trend_verdict, AccuracyDelta, SweepConfig, SweepPoint, TrendVerdict, TrialResult,
};
pub use folds::{accuracy_on, cv_folds_by_session, evaluate, folds_from_sessions, mean_std, Fold, FoldResult};
pub use networks::{
    dataset_from_ntc, dataset_to_ntc, mapped_to_ntc, network_from_ntc, network_to_ntc, BenchNetwork,
};
pub use ntc::{load_ntc, parse_ntc, save_ntc, NtcContainer};
pub use report::{
    compare_all, compare_cost, energy_band, format_cost_table, network_cost, plot_tsv, rows_from_csv,
    rows_to_csv, sort_rows, CostComparison, Flag, ReportRow,
};
