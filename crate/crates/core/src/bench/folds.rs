use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::data::{Dataset, Modality, NUM_SESSIONS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// One split: test on a whole session, train on the others.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub session: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Session-grouped folds; fold `k` holds out session `k`.
pub fn cv_folds_by_session<T: Scalar>(ds: &Dataset<T>) -> Result<Vec<Fold>> {
    folds_from_sessions(&ds.sessions)
}

pub fn folds_from_sessions(sessions: &[usize]) -> Result<Vec<Fold>> {
    let mut folds: Vec<Fold> = (0..NUM_SESSIONS)
        .map(|session| Fold {
            session,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for (i, &s) in sessions.iter().enumerate() {
        if s >= NUM_SESSIONS {
            return Err(Error::config(format!("sample {i} has session {s}")));
        }
        for f in &mut folds {
            if f.session == s {
                f.test.push(i);
            } else {
                f.train.push(i);
            }
        }
    }
    if let Some(f) = folds.iter().find(|f| f.test.is_empty()) {
        return Err(Error::config(format!("session {} has no samples", f.session)));
    }
    Ok(folds)
}

/// Per-fold accuracies with their mean and sample (n - 1) standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl FoldResult {
    pub fn from_accuracies(per_fold: Vec<f64>) -> Result<Self> {
        if per_fold.is_empty() {
            return Err(Error::config("no fold accuracies"));
        }
        let (mean, std) = mean_std(&per_fold);
        Ok(FoldResult { per_fold, mean, std })
    }
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Fraction of `indices` for which `predict` returns the true label.
pub fn accuracy_on<T, F>(ds: &Dataset<T>, indices: &[usize], modality: Modality, predict: F) -> Result<f64>
where
    T: Scalar,
    F: Fn(&[Tensor<T>]) -> Result<usize> + Sync,
{
    if indices.is_empty() {
        return Err(Error::config("cannot score an empty index set"));
    }
    let hits = indices
        .par_iter()
        .map(|&i| predict(&ds.inputs(i, modality)).map(|p| usize::from(p == ds.labels[i])))
        .sum::<Result<usize>>()?;
    Ok(hits as f64 / indices.len() as f64)
}

/// Scores `runner(fold_index, inputs)` on every fold's test set.
pub fn evaluate<T, F>(ds: &Dataset<T>, folds: &[Fold], modality: Modality, runner: F) -> Result<FoldResult>
where
    T: Scalar,
    F: Fn(usize, &[Tensor<T>]) -> Result<usize> + Sync,
{
    let per_fold = folds
        .iter()
        .enumerate()
        .map(|(k, f)| accuracy_on(ds, &f.test, modality, |x| runner(k, x)))
        .collect::<Result<Vec<_>>>()?;
    FoldResult::from_accuracies(per_fold)
}
