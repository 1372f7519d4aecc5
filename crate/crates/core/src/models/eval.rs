//! Train/test splitting, k-fold grid search and repeated seeded evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, ModelError, TrainConfig};
use crate::matrix::Dataset;
use crate::metrics::{aggregate_runs, confusion, AggregateReport, ConfusionMatrix, MetricsReport};

/// Row indices of a train/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainTestSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Uniform random partition with `floor(n (1 - t))` training rows.
pub fn split_train_test(n: usize, test_fraction: f64, seed: u64) -> Result<TrainTestSplit, ModelError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ModelError::InvalidConfig(format!("test_fraction {test_fraction} must lie in (0, 1)")));
    }
    // The epsilon keeps e.g. 100 * 0.85 from flooring to 84.
    let n_train = ((n as f64) * (1.0 - test_fraction) + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(ModelError::DegenerateSplit { train: n_train, test: n.saturating_sub(n_train) });
    }
    let perm = permutation(n, seed);
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(TrainTestSplit { train, test })
}

/// Seeded fold id per row; fold sizes differ by at most one.
pub fn fold_assignments(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut folds = vec![0; n];
    for (pos, &row) in permutation(n, seed).iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub config: TrainConfig,
    pub fold_f1: Vec<Option<f64>>,
    /// Mean over folds, counting an undefined fold F1 as 0.
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub scores: Vec<CvScore>,
    pub selected: usize,
    pub folds: Vec<usize>,
}

impl CvResult {
    pub fn best_config(&self) -> &TrainConfig {
        &self.scores[self.selected].config
    }
}

fn evaluate(train_set: &Dataset, test_set: &Dataset, config: &TrainConfig) -> Result<ConfusionMatrix, ModelError> {
    let model = train(train_set, config)?;
    let pred = model.classify(&test_set.x, 0.5)?;
    Ok(confusion(&test_set.y, &pred)?)
}

/// Scores every config on the same seeded folds and selects the highest mean F1; ties keep
/// the earlier grid entry.
pub fn kfold_grid_search(data: &Dataset, grid: &[TrainConfig], k: usize, seed: u64) -> Result<CvResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    if k < 2 {
        return Err(ModelError::InvalidConfig("k must be at least 2".into()));
    }
    if data.len() < k {
        return Err(ModelError::FoldTooSmall { fold: data.len(), size: 0 });
    }
    let folds = fold_assignments(data.len(), k, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            let (va, tr): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| folds[i] == f);
            (data.subset(&tr), data.subset(&va))
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let results: Vec<Result<Option<f64>, ModelError>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (tr, va) = &splits[f];
            Ok(evaluate(tr, va, &grid[c])?.report().f1)
        })
        .collect();
    let mut scores = Vec::with_capacity(grid.len());
    let mut it = results.into_iter();
    for config in grid {
        let fold_f1 = it.by_ref().take(k).collect::<Result<Vec<_>, _>>()?;
        let mean_f1 = fold_f1.iter().map(|v| v.unwrap_or(0.0)).sum::<f64>() / k as f64;
        scores.push(CvScore { config: config.clone(), fold_f1, mean_f1 });
    }
    let mut selected = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_f1 > scores[selected].mean_f1 {
            selected = i;
        }
    }
    Ok(CvResult { scores, selected, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: Vec<RunRecord>,
    pub aggregate: AggregateReport,
}

impl RunAggregate {
    pub fn seeds(&self) -> Vec<u64> {
        self.runs.iter().map(|r| r.seed).collect()
    }
}

/// Run `i` splits and trains with seed `base_seed + i`; metrics are summarised with
/// Student-t 95% intervals.
pub fn repeated_evaluate(
    data: &Dataset,
    config: &TrainConfig,
    n_runs: usize,
    base_seed: u64,
    test_fraction: f64,
) -> Result<RunAggregate, ModelError> {
    if n_runs < 2 {
        return Err(ModelError::InvalidConfig("n_runs must be at least 2".into()));
    }
    let runs = (0..n_runs as u64)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i;
            let split = split_train_test(data.len(), test_fraction, seed)?;
            let cfg = TrainConfig { seed, ..config.clone() };
            let cm = evaluate(&data.subset(&split.train), &data.subset(&split.test), &cfg)?;
            Ok(RunRecord { seed, confusion: cm, report: cm.report() })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let reports: Vec<MetricsReport> = runs.iter().map(|r| r.report).collect();
    let aggregate = aggregate_runs(&reports)?;
    Ok(RunAggregate { runs, aggregate })
}
