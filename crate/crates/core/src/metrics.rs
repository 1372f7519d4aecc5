//! Binary confusion matrix, precision / recall / F1 and run aggregation.
//!
//! The positive class is label 1 (conservative). A metric whose denominator is zero is
//! reported as `None` rather than a silent zero.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {truth} true labels vs {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("non-binary label {value} at position {index}")]
    NonBinary { index: usize, value: u8 },
    #[error("{metric}: need at least 2 defined values, found {found}")]
    TooFewValues { metric: &'static str, found: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn report(&self) -> MetricsReport {
        MetricsReport { precision: precision(self), recall: recall(self), f1: f1(self) }
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch { truth: y_true.len(), pred: y_pred.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (i, (&t, &p)) in y_true.iter().zip(y_pred).enumerate() {
        for v in [t, p] {
            if v > 1 {
                return Err(MetricsError::NonBinary { index: i, value: v });
            }
        }
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// TP / (TP + FP).
pub fn precision(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fp)
}

/// TP / (TP + FN).
pub fn recall(cm: &ConfusionMatrix) -> Option<f64> {
    ratio(cm.tp, cm.tp + cm.fn_)
}

/// Harmonic mean of precision and recall; undefined when either is undefined or both are 0.
pub fn f1(cm: &ConfusionMatrix) -> Option<f64> {
    let (p, r) = (precision(cm)?, recall(cm)?);
    let s = p + r;
    (s > 0.0).then(|| 2.0 * p * r / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

/// Mean and 95% Student-t half-width of one metric over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub half_width: f64,
    pub n_defined: usize,
    pub n_undefined: usize,
}

impl MetricSummary {
    /// Presentation form, e.g. `0.977 ± 0.002`.
    pub fn display(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean, self.half_width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub precision: MetricSummary,
    pub recall: MetricSummary,
    pub f1: MetricSummary,
}

/// Two-sided 95% Student-t critical value with `df` degrees of freedom.
pub fn t_critical_95(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1 gives a valid distribution").inverse_cdf(0.975)
}

/// Mean and t-based 95% CI half-width (n - 1 degrees of freedom).
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = if var == 0.0 { 0.0 } else { t_critical_95(n - 1) * var.sqrt() / (n as f64).sqrt() };
    Some((mean, half))
}

pub fn summarize(metric: &'static str, values: &[Option<f64>]) -> Result<MetricSummary, MetricsError> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let (mean, half_width) = mean_ci95(&defined).ok_or(MetricsError::TooFewValues { metric, found: defined.len() })?;
    Ok(MetricSummary { mean, half_width, n_defined: defined.len(), n_undefined: values.len() - defined.len() })
}

/// Aggregates per-run reports; undefined entries are excluded and counted.
pub fn aggregate_runs(reports: &[MetricsReport]) -> Result<AggregateReport, MetricsError> {
    let col = |f: fn(&MetricsReport) -> Option<f64>| reports.iter().map(f).collect::<Vec<_>>();
    Ok(AggregateReport {
        precision: summarize("precision", &col(|r| r.precision))?,
        recall: summarize("recall", &col(|r| r.recall))?,
        f1: summarize("f1", &col(|r| r.f1))?,
    })
}

/// Rounds to three decimals.
pub fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
