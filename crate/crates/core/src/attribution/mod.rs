//! SHAP attributions for tree ensembles and the analyses built on them.
//!
//! Values are in the ensemble's raw output space: log-odds for boosting, positive-class
//! frequency for forests. Apply the link function only to the total, never per feature.

pub mod treeshap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{is_missing, Matrix};
use crate::models::{ModelError, TreeEnsemble};
use crate::table::{fmt_f64, fmt_opt, Table, NA};

pub use treeshap::{brute_force_shap, coalition_value, tree_shap, BRUTE_FORCE_LIMIT};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AttributionError {
    #[error("row width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    InvalidModel(ModelError),
    #[error("{count} active features exceed the brute-force limit of {limit}")]
    TooManyFeatures { count: usize, limit: usize },
    #[error("feature index {index} out of range for {n_features} features")]
    FeatureIndex { index: usize, n_features: usize },
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    pub row_ids: Vec<String>,
    pub values: Matrix,
    pub base_value: f64,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    /// Largest `|base + Σ φ - raw output|` over the rows of `x`.
    pub fn local_accuracy_error(&self, ensemble: &TreeEnsemble, x: &Matrix) -> f64 {
        (0..self.n_rows())
            .map(|i| {
                let total = self.base_value + self.values.row(i).iter().sum::<f64>();
                (total - ensemble.raw_output(x.row(i))).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["row_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        let mut t = Table::new(header);
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.values.row(i).iter().map(|v| fmt_f64(*v)));
            t.push(row);
        }
        t
    }
}

/// Row-parallel attributions; output rows follow input order.
pub fn shap_matrix(
    ensemble: &TreeEnsemble,
    x: &Matrix,
    row_ids: &[String],
    feature_names: &[String],
) -> Result<ShapMatrix, AttributionError> {
    if x.n_cols() != ensemble.n_features {
        return Err(AttributionError::WidthMismatch { expected: ensemble.n_features, found: x.n_cols() });
    }
    if row_ids.len() != x.n_rows() || feature_names.len() != x.n_cols() {
        return Err(AttributionError::Shape("row ids / feature names do not match the matrix".into()));
    }
    ensemble.validate().map_err(AttributionError::InvalidModel)?;
    let rows: Vec<Vec<f64>> =
        (0..x.n_rows()).into_par_iter().map(|i| treeshap::tree_shap_unchecked(ensemble, x.row(i))).collect();
    Ok(ShapMatrix {
        feature_names: feature_names.to_vec(),
        row_ids: row_ids.to_vec(),
        values: Matrix::from_vec(x.n_rows(), x.n_cols(), rows.concat()),
        base_value: ensemble.expected_value(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub index: usize,
    pub mean_abs_shap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<ImportanceEntry>,
}

impl ImportanceRanking {
    pub fn top(&self) -> Option<&ImportanceEntry> {
        self.entries.first()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["rank", "feature", "index", "mean_abs_shap"]);
        for (r, e) in self.entries.iter().enumerate() {
            t.push([(r + 1).to_string(), e.feature.clone(), e.index.to_string(), fmt_f64(e.mean_abs_shap)]);
        }
        t
    }
}

/// Features by mean |SHAP|, descending; equal means keep feature order.
pub fn importance_ranking(shap: &ShapMatrix) -> ImportanceRanking {
    let n = shap.n_rows().max(1) as f64;
    let mut entries: Vec<ImportanceEntry> = shap
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| ImportanceEntry {
            feature: name.clone(),
            index: j,
            mean_abs_shap: shap.values.rows().map(|r| r[j].abs()).sum::<f64>() / n,
        })
        .collect();
    entries.sort_by(|a, b| b.mean_abs_shap.total_cmp(&a.mean_abs_shap).then(a.index.cmp(&b.index)));
    ImportanceRanking { entries }
}

/// Pearson correlation; `None` if either column has zero variance or fewer than 2 values.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n < 2 || b.len() != n {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapCorrelationMatrix {
    pub feature_names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl ShapCorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Feature pairs (i < j) with |r| above `threshold`.
    pub fn strong_pairs(&self, threshold: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.values.len() {
            for j in i + 1..self.values.len() {
                if let Some(r) = self.values[i][j] {
                    if r.abs() > threshold {
                        out.push((i, j, r));
                    }
                }
            }
        }
        out
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec!["feature".to_string()];
        header.extend(self.feature_names.iter().cloned());
        let mut t = Table::new(header);
        for (name, row) in self.feature_names.iter().zip(&self.values) {
            let mut r = vec![name.clone()];
            r.extend(row.iter().map(|v| fmt_opt(*v)));
            t.push(r);
        }
        t
    }
}

pub fn shap_correlation(shap: &ShapMatrix) -> ShapCorrelationMatrix {
    let p = shap.values.n_cols();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| shap.values.column(j)).collect();
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        for j in i..p {
            let r = if i == j { pearson(&cols[i], &cols[i]).map(|_| 1.0) } else { pearson(&cols[i], &cols[j]) };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    ShapCorrelationMatrix { feature_names: shap.feature_names.clone(), values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencePoint {
    pub row_id: String,
    pub value: f64,
    pub shap: f64,
    pub secondary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceSeries {
    pub feature: String,
    pub secondary_feature: Option<String>,
    /// Rows with an observed feature value, in matrix order.
    pub points: Vec<DependencePoint>,
    /// Rows whose feature value is missing.
    pub missing: Vec<DependencePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_shap: f64,
}

impl DependenceSeries {
    pub fn len(&self) -> usize {
        self.points.len() + self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean SHAP in `n` equal-width value buckets; empty buckets are omitted.
    pub fn bucket_means(&self, n: usize) -> Vec<Bucket> {
        let (lo, hi) =
            self.points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.value), h.max(p.value)));
        if self.points.is_empty() || n == 0 {
            return Vec::new();
        }
        let width = (hi - lo) / n as f64;
        let mut sums = vec![(0.0, 0usize); n];
        for p in &self.points {
            let k = if width > 0.0 { (((p.value - lo) / width) as usize).min(n - 1) } else { 0 };
            sums[k].0 += p.shap;
            sums[k].1 += 1;
        }
        sums.into_iter()
            .enumerate()
            .filter(|(_, (_, c))| *c > 0)
            .map(|(k, (s, c))| Bucket {
                lo: lo + k as f64 * width,
                hi: lo + (k + 1) as f64 * width,
                count: c,
                mean_shap: s / c as f64,
            })
            .collect()
    }

    pub fn to_table(&self) -> Table {
        let secondary = self.secondary_feature.clone().unwrap_or_else(|| "secondary".into());
        let mut t = Table::new(["row_id".to_string(), self.feature.clone(), "shap".into(), "bucket".into(), secondary]);
        for (bucket, pts) in [("value", &self.points), ("missing", &self.missing)] {
            for p in pts {
                let value = if bucket == "missing" { NA.to_string() } else { fmt_f64(p.value) };
                let sec = p.secondary.map_or_else(|| NA.to_string(), fmt_f64);
                t.push([p.row_id.clone(), value, fmt_f64(p.shap), bucket.to_string(), sec]);
            }
        }
        t
    }
}

/// `(value, SHAP)` per row for `feature`, with an optional secondary feature column.
pub fn dependence_series(
    shap: &ShapMatrix,
    x: &Matrix,
    feature: usize,
    secondary: Option<usize>,
) -> Result<DependenceSeries, AttributionError> {
    let p = shap.values.n_cols();
    for idx in std::iter::once(feature).chain(secondary) {
        if idx >= p {
            return Err(AttributionError::FeatureIndex { index: idx, n_features: p });
        }
    }
    if x.n_rows() != shap.n_rows() || x.n_cols() != p {
        return Err(AttributionError::Shape("feature rows do not match the SHAP matrix".into()));
    }
    let mut series = DependenceSeries {
        feature: shap.feature_names[feature].clone(),
        secondary_feature: secondary.map(|s| shap.feature_names[s].clone()),
        points: Vec::new(),
        missing: Vec::new(),
    };
    for i in 0..x.n_rows() {
        let value = x.get(i, feature);
        let point = DependencePoint {
            row_id: shap.row_ids[i].clone(),
            value,
            shap: shap.values.get(i, feature),
            secondary: secondary.map(|s| x.get(i, s)).filter(|v| !is_missing(*v)),
        };
        if is_missing(value) {
            series.missing.push(point);
        } else {
            series.points.push(point);
        }
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::{Node, Objective, Tree};

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("f{j}")).collect()
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    fn manual(values: &[[f64; 2]]) -> ShapMatrix {
        ShapMatrix {
            feature_names: names(2),
            row_ids: ids(values.len()),
            values: Matrix::from_rows(values),
            base_value: 0.0,
        }
    }

    #[test]
    fn zero_tree_ensemble_gives_zero_matrix() {
        let e = TreeEnsemble::empty(Objective::LogisticBoost, 0.3, 2);
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let s = shap_matrix(&e, &x, &ids(2), &names(2)).unwrap();
        assert!(s.values.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(s.base_value, 0.3);
        let empty = shap_matrix(&e, &Matrix::zeros(0, 2), &[], &names(2)).unwrap();
        assert_eq!(empty.values.n_cols(), 2);
    }

    #[test]
    fn ranking_orders_by_mean_abs_with_index_ties() {
        let s = manual(&[[0.5, 1.0], [0.5, -1.0]]);
        let r = importance_ranking(&s);
        assert_eq!(r.entries[0].feature, "f1");
        assert_eq!(r.entries[0].mean_abs_shap, 1.0);
        let z = importance_ranking(&manual(&[[0.0, 0.0]]));
        assert_eq!(z.entries.iter().map(|e| e.index).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn correlation_edge_cases() {
        let s = manual(&[[1.0, -1.0], [2.0, -2.0], [4.0, -4.0]]);
        let c = shap_correlation(&s);
        assert_eq!(c.get(0, 0), Some(1.0));
        assert!((c.get(0, 1).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(c.get(0, 1), c.get(1, 0));
        let flat = shap_correlation(&manual(&[[1.0, 3.0], [2.0, 3.0]]));
        assert_eq!(flat.get(1, 1), None);
        assert_eq!(flat.get(0, 1), None);
        assert_eq!(c.strong_pairs(0.6), vec![(0, 1, c.get(0, 1).unwrap())]);
    }

    #[test]
    fn pearson_matches_naive_covariance_route() {
        let a: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = a.iter().enumerate().map(|(i, v)| 2.0 * v + 1e-9 * (i as f64).cos()).collect();
        let r = pearson(&a, &b).unwrap();
        assert!((r - 1.0).abs() < 1e-9);
        // E[ab] - E[a]E[b] over population standard deviations.
        let n = a.len() as f64;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n - ma * mb;
        let sa = (a.iter().map(|x| x * x).sum::<f64>() / n - ma * ma).sqrt();
        let sb = (b.iter().map(|x| x * x).sum::<f64>() / n - mb * mb).sqrt();
        assert!((r - cov / (sa * sb)).abs() < 1e-9);
    }

    #[test]
    fn stump_dependence_is_a_step() {
        let tree = Tree {
            nodes: vec![
                Node::Split { feature: 1, threshold: 0.5, default_left: false, left: 1, right: 2, cover: 4.0 },
                Node::Leaf { value: -1.0, cover: 3.0 },
                Node::Leaf { value: 2.0, cover: 1.0 },
            ],
        };
        let e = TreeEnsemble { trees: vec![tree], ..TreeEnsemble::empty(Objective::LogisticBoost, 0.0, 2) };
        let x = Matrix::from_rows(&[[0.0, 0.1], [0.0, 0.3], [0.0, 0.7], [0.0, 0.9], [0.0, f64::NAN]]);
        let s = shap_matrix(&e, &x, &ids(5), &names(2)).unwrap();
        assert!(s.local_accuracy_error(&e, &x) < 1e-12);
        let d = dependence_series(&s, &x, 1, Some(0)).unwrap();
        let levels: Vec<f64> = d.points.iter().map(|p| p.shap).collect();
        assert_eq!(levels, vec![-0.75, -0.75, 2.25, 2.25]);
        assert_eq!(d.missing.len(), 1);
        assert_eq!(d.missing[0].shap, 2.25);
        assert_eq!(d.len(), 5);
        let b = d.bucket_means(2);
        assert_eq!(b.iter().map(|b| b.mean_shap).collect::<Vec<_>>(), vec![-0.75, 2.25]);
        assert!(dependence_series(&s, &x, 2, None).is_err());
        assert_eq!(d.to_table().rows.len(), 5);
    }
}
