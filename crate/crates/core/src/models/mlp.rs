//! One-hidden-layer perceptron: standardized inputs → ReLU hidden layer → sigmoid output,
//! trained with Adam on mean binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::sigmoid;
use super::{check_labels, ModelError, ModelKind, TrainConfig};
use crate::matrix::{is_missing, Dataset, Matrix};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const VALIDATION_FRACTION: f64 = 0.1;

/// Fills missing entries with per-column means of the data it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnImputer {
    pub means: Vec<f64>,
}

impl ColumnImputer {
    /// Columns with no observed value are filled with 0.
    pub fn fit(x: &Matrix) -> Self {
        let means = (0..x.n_cols())
            .map(|j| {
                let (s, n) =
                    x.rows().map(|r| r[j]).filter(|v| !is_missing(*v)).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    0.0
                } else {
                    s / n as f64
                }
            })
            .collect();
        Self { means }
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, ModelError> {
        if x.n_cols() != self.means.len() {
            return Err(ModelError::WidthMismatch { expected: self.means.len(), found: x.n_cols() });
        }
        let mut out = x.clone();
        for i in 0..out.n_rows() {
            for (v, m) in out.row_mut(i).iter_mut().zip(&self.means) {
                if is_missing(*v) {
                    *v = *m;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n: usize) -> Self {
        Self { mean: vec![0.0; n], scale: vec![1.0; n] }
    }

    /// Zero-variance columns keep scale 1.
    pub fn fit(x: &Matrix) -> Self {
        let n = x.n_rows().max(1) as f64;
        let mut mean = vec![0.0; x.n_cols()];
        for r in x.rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; x.n_cols()];
        for r in x.rows() {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let scale = var.into_iter().map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, scale }
    }

    fn apply(&self, row: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (row[j] - self.mean[j]) / self.scale[j];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    n_in: usize,
    n_hidden: usize,
    /// Hidden weights, row-major `n_hidden × n_in`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub standardizer: Standardizer,
    pub adam: AdamState,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
}

impl MlpModel {
    pub fn zeros(n_in: usize, n_hidden: usize) -> Self {
        let n_params = n_hidden * n_in + 2 * n_hidden + 1;
        Self {
            n_in,
            n_hidden,
            w1: vec![0.0; n_hidden * n_in],
            b1: vec![0.0; n_hidden],
            w2: vec![0.0; n_hidden],
            b2: 0.0,
            standardizer: Standardizer::identity(n_in),
            adam: AdamState { step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] },
            train_loss: Vec::new(),
            val_loss: Vec::new(),
        }
    }

    /// He-uniform hidden weights, Glorot-uniform output weights, zero biases.
    pub fn random(n_in: usize, n_hidden: usize, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(n_in, n_hidden);
        let a1 = (6.0 / n_in.max(1) as f64).sqrt();
        let a2 = (6.0 / (n_hidden + 1) as f64).sqrt();
        m.w1.iter_mut().for_each(|w| *w = rng.random_range(-a1..a1));
        m.w2.iter_mut().for_each(|w| *w = rng.random_range(-a2..a2));
        m
    }

    pub fn n_inputs(&self) -> usize {
        self.n_in
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat parameter vector `[w1, b1, w2, b2]`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        p.extend_from_slice(&self.w1);
        p.extend_from_slice(&self.b1);
        p.extend_from_slice(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.n_hidden);
        let (c, d) = rest.split_at(self.n_hidden);
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = d[0];
    }

    fn hidden(&self, x: &[f64], z: &mut [f64]) {
        for (k, zk) in z.iter_mut().enumerate() {
            let w = &self.w1[k * self.n_in..(k + 1) * self.n_in];
            *zk = self.b1[k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Output logit for an already standardized row.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; self.n_hidden];
        self.hidden(x, &mut z);
        self.b2 + z.iter().zip(&self.w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>()
    }

    /// Mean cross-entropy and its gradient over standardized rows `idx` of `x`.
    pub fn loss_and_grad(&self, x: &Matrix, y: &[u8], idx: &[usize]) -> (f64, Vec<f64>) {
        let n = idx.len().max(1) as f64;
        let mut grad = vec![0.0; self.n_params()];
        let (gw1, rest) = grad.split_at_mut(self.w1.len());
        let (gb1, rest) = rest.split_at_mut(self.n_hidden);
        let (gw2, gb2) = rest.split_at_mut(self.n_hidden);
        let mut z = vec![0.0; self.n_hidden];
        let mut loss = 0.0;
        for &i in idx {
            let xi = x.row(i);
            self.hidden(xi, &mut z);
            let out = self.b2 + z.iter().zip(&self.w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>();
            let t = f64::from(y[i]);
            loss += softplus(out) - t * out;
            let d_out = (sigmoid(out) - t) / n;
            gb2[0] += d_out;
            for k in 0..self.n_hidden {
                if z[k] > 0.0 {
                    gw2[k] += d_out * z[k];
                    let dz = d_out * self.w2[k];
                    gb1[k] += dz;
                    for (g, v) in gw1[k * self.n_in..(k + 1) * self.n_in].iter_mut().zip(xi) {
                        *g += dz * v;
                    }
                }
            }
        }
        (loss / n, grad)
    }

    fn mean_loss(&self, x: &Matrix, y: &[u8], idx: &[usize]) -> f64 {
        idx.iter()
            .map(|&i| {
                let out = self.logit(x.row(i));
                softplus(out) - f64::from(y[i]) * out
            })
            .sum::<f64>()
            / idx.len().max(1) as f64
    }

    fn adam_step(&mut self, grad: &[f64], lr: f64) {
        let mut p = self.params();
        let s = &mut self.adam;
        s.step += 1;
        let c1 = 1.0 - BETA1.powi(s.step as i32);
        let c2 = 1.0 - BETA2.powi(s.step as i32);
        for i in 0..p.len() {
            s.m[i] = BETA1 * s.m[i] + (1.0 - BETA1) * grad[i];
            s.v[i] = BETA2 * s.v[i] + (1.0 - BETA2) * grad[i] * grad[i];
            p[i] -= lr * (s.m[i] / c1) / ((s.v[i] / c2).sqrt() + ADAM_EPS);
        }
        self.set_params(&p);
    }

    fn standardize(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.n_rows(), x.n_cols());
        for i in 0..x.n_rows() {
            self.standardizer.apply(x.row(i), out.row_mut(i));
        }
        out
    }

    /// Probabilities for raw (unstandardized) rows. Missing values are rejected.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.n_cols() != self.n_in {
            return Err(ModelError::WidthMismatch { expected: self.n_in, found: x.n_cols() });
        }
        check_no_missing(x)?;
        let xs = self.standardize(x);
        Ok(xs.rows().map(|r| sigmoid(self.logit(r))).collect())
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn check_no_missing(x: &Matrix) -> Result<(), ModelError> {
    for (row, r) in x.rows().enumerate() {
        if let Some(col) = r.iter().position(|v| is_missing(*v)) {
            return Err(ModelError::MissingValue { row, col });
        }
    }
    Ok(())
}

/// Central finite-difference gradient of the mean loss, for checking [`MlpModel::loss_and_grad`].
pub fn numeric_grad(model: &MlpModel, x: &Matrix, y: &[u8], idx: &[usize], eps: f64) -> Vec<f64> {
    let base = model.params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + eps;
        probe.set_params(&p);
        let up = probe.mean_loss(x, y, idx);
        p[i] = base[i] - eps;
        probe.set_params(&p);
        let down = probe.mean_loss(x, y, idx);
        out.push((up - down) / (2.0 * eps));
    }
    out
}

/// `|a - b| / max(|a|, |b|)`, with components where both are below `1e-8` counted as agreeing.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let den = a.abs().max(b.abs());
    if den < 1e-8 {
        0.0
    } else {
        (a - b).abs() / den
    }
}

/// Trains on a fully observed dataset. A tenth of the rows (seeded) is held out for early
/// stopping; the parameters with the best validation loss are kept.
pub fn train_mlp(train: &Dataset, config: &TrainConfig) -> Result<MlpModel, ModelError> {
    config.validate()?;
    if config.kind != ModelKind::Mlp {
        return Err(ModelError::InvalidConfig("train_mlp requires kind = mlp".into()));
    }
    if train.is_empty() {
        return Err(ModelError::EmptyData);
    }
    check_labels(&train.y)?;
    check_no_missing(&train.x)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::random(train.n_features(), config.hidden_units, &mut rng);
    model.standardizer = Standardizer::fit(&train.x);
    let xs = model.standardize(&train.x);

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut rng);
    let n_val = if train.len() >= 10 { ((train.len() as f64) * VALIDATION_FRACTION).ceil() as usize } else { 0 };
    let (val, fit) = order.split_at(n_val);
    let val = val.to_vec();
    let mut fit = fit.to_vec();
    let monitor: &[usize] = if val.is_empty() { &order } else { &val };

    let mut best = (f64::INFINITY, model.params());
    let mut wait = 0;
    for epoch in 0..config.max_epochs {
        fit.shuffle(&mut rng);
        for (batch, chunk) in fit.chunks(config.batch_size).enumerate() {
            let (loss, grad) = model.loss_and_grad(&xs, &train.y, chunk);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(ModelError::NonFiniteLoss { epoch, batch });
            }
            model.adam_step(&grad, config.learning_rate);
        }
        model.train_loss.push(model.mean_loss(&xs, &train.y, &fit));
        let v = model.mean_loss(&xs, &train.y, monitor);
        if !v.is_finite() {
            return Err(ModelError::NonFiniteLoss { epoch, batch: 0 });
        }
        model.val_loss.push(v);
        if v < best.0 {
            best = (v, model.params());
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience {
                break;
            }
        }
    }
    model.set_params(&best.1);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MISSING;

    #[test]
    fn zero_weights_output_sigmoid_of_bias() {
        let mut m = MlpModel::zeros(3, 4);
        m.b2 = 0.7;
        let p = m.predict_proba(&Matrix::from_rows(&[[1.0, 2.0, 3.0], [-5.0, 0.0, 9.0]])).unwrap();
        assert!(p.iter().all(|&v| v == sigmoid(0.7)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = MlpModel::random(4, 6, &mut rng);
        let x = Matrix::from_rows(&(0..5).map(|_| [0; 4].map(|_| rng.random_range(-2.0..2.0))).collect::<Vec<_>>());
        let y = vec![1, 0, 1, 1, 0];
        let idx: Vec<usize> = (0..5).collect();
        let (_, g) = m.loss_and_grad(&x, &y, &idx);
        let ng = numeric_grad(&m, &x, &y, &idx, 1e-5);
        let worst = g.iter().zip(&ng).map(|(a, b)| relative_error(*a, *b)).fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn separable_data_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<[f64; 2]> =
            (0..500).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(2.0 * r[0] - r[1] > 0.0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let (tr, te) = (d.subset(&(0..400).collect::<Vec<_>>()), d.subset(&(400..500).collect::<Vec<_>>()));
        let c = TrainConfig { learning_rate: 0.01, ..TrainConfig::mlp() };
        let m = train_mlp(&tr, &c).unwrap();
        let p = m.predict_proba(&te.x).unwrap();
        let acc = p.iter().zip(&te.y).filter(|(p, &t)| u8::from(**p >= 0.5) == t).count() as f64 / te.len() as f64;
        assert!(acc >= 0.98, "{acc}");
    }

    #[test]
    fn missing_inputs_are_rejected() {
        let m = MlpModel::zeros(2, 2);
        assert_eq!(
            m.predict_proba(&Matrix::from_rows(&[[1.0, MISSING]])),
            Err(ModelError::MissingValue { row: 0, col: 1 })
        );
        let d = Dataset::new(Matrix::from_rows(&[[MISSING]]), vec![1]);
        assert!(matches!(train_mlp(&d, &TrainConfig::mlp()), Err(ModelError::MissingValue { .. })));
    }

    #[test]
    fn infinite_input_reports_non_finite_loss() {
        let rows: Vec<[f64; 1]> = (0..40).map(|i| [if i == 0 { f64::INFINITY } else { i as f64 }]).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        assert_eq!(train_mlp(&d, &TrainConfig::mlp()), Err(ModelError::NonFiniteLoss { epoch: 0, batch: 0 }));
    }

    #[test]
    fn imputer_uses_column_means() {
        let x = Matrix::from_rows(&[[1.0, MISSING], [3.0, 4.0], [MISSING, MISSING]]);
        let imp = ColumnImputer::fit(&x);
        assert_eq!(imp.means, vec![2.0, 4.0]);
        let t = imp.transform(&x).unwrap();
        assert_eq!(t.row(2), &[2.0, 4.0]);
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [i as f64, (i % 7) as f64]).collect();
        let y: Vec<u8> = (0..60).map(|i| u8::from(i > 30)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let c = TrainConfig { max_epochs: 20, ..TrainConfig::mlp() };
        assert_eq!(train_mlp(&d, &c).unwrap(), train_mlp(&d, &c).unwrap());
    }
}
