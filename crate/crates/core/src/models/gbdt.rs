//! Second-order gradient boosting on the logistic loss.
//!
//! Each round fits a tree to per-row gradients `p - y` and hessians `p (1 - p)`. Leaf weights
//! are `-G / (H + λ)` scaled by the learning rate; splits maximise
//! `½ [G_L² / (H_L + λ) + G_R² / (H_R + λ) - G² / (H + λ)]` over histogram cut points, with
//! missing values sent to whichever side scores higher.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::binning::{BinnedMatrix, MISSING_BIN};
use super::tree::{sigmoid, Node, Objective, Tree, TreeEnsemble};
use super::{check_labels, GrowthPolicy, ModelError, ModelKind, TrainConfig};
use crate::matrix::Dataset;

/// Splits with a gain at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;
const PAR_WORK: usize = 20_000;

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    g: f64,
    h: f64,
    n: usize,
}

impl Stats {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }

    fn plus(self, o: Stats) -> Stats {
        Stats { g: self.g + o.g, h: self.h + o.h, n: self.n + o.n }
    }

    fn minus(self, o: Stats) -> Stats {
        Stats { g: self.g - o.g, h: self.h - o.h, n: self.n - o.n }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    /// Cut index; `cuts.len()` separates non-missing (left) from missing (right).
    cut: usize,
    default_left: bool,
    gain: f64,
    left: Stats,
    right: Stats,
}

struct Grower<'a> {
    binned: &'a BinnedMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    features: &'a [usize],
    lambda: f64,
    min_child_weight: f64,
    learning_rate: f64,
}

struct Open {
    node: usize,
    rows: Vec<usize>,
    depth: usize,
    candidate: Option<Candidate>,
}

impl Grower<'_> {
    fn score(&self, s: Stats) -> f64 {
        s.g * s.g / (s.h + self.lambda)
    }

    fn leaf_value(&self, s: Stats) -> f64 {
        -s.g / (s.h + self.lambda) * self.learning_rate
    }

    fn admissible(&self, l: Stats, r: Stats) -> bool {
        l.n > 0 && r.n > 0 && l.h >= self.min_child_weight && r.h >= self.min_child_weight
    }

    fn best_for_feature(&self, f: usize, rows: &[usize], total: Stats) -> Option<Candidate> {
        let n_bins = self.binned.n_bins(f);
        let codes = &self.binned.bins[f];
        let mut hist = vec![Stats::default(); n_bins];
        let mut missing = Stats::default();
        for &r in rows {
            let b = codes[r];
            if b == MISSING_BIN {
                missing.add(self.grad[r], self.hess[r]);
            } else {
                hist[b as usize].add(self.grad[r], self.hess[r]);
            }
        }
        let parent = self.score(total);
        let mut best: Option<Candidate> = None;
        let mut consider = |cut: usize, default_left: bool, left: Stats, right: Stats| {
            if !self.admissible(left, right) {
                return;
            }
            let gain = 0.5 * (self.score(left) + self.score(right) - parent);
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate { feature: f, cut, default_left, gain, left, right });
            }
        };
        let non_missing = total.minus(missing);
        let mut acc = Stats::default();
        for (k, bin) in hist.iter().take(n_bins - 1).enumerate() {
            acc = acc.plus(*bin);
            let right_nm = non_missing.minus(acc);
            if missing.n == 0 {
                consider(k, acc.h >= right_nm.h, acc, right_nm);
            } else {
                consider(k, true, acc.plus(missing), right_nm);
                consider(k, false, acc, right_nm.plus(missing));
            }
        }
        if missing.n > 0 {
            consider(n_bins - 1, false, non_missing, missing);
        }
        best
    }

    fn best_split(&self, rows: &[usize]) -> Option<Candidate> {
        if rows.len() < 2 {
            return None;
        }
        let mut total = Stats::default();
        for &r in rows {
            total.add(self.grad[r], self.hess[r]);
        }
        let per_feature: Vec<Option<Candidate>> = if rows.len() * self.features.len() >= PAR_WORK {
            self.features.par_iter().map(|&f| self.best_for_feature(f, rows, total)).collect()
        } else {
            self.features.iter().map(|&f| self.best_for_feature(f, rows, total)).collect()
        };
        // Features are ascending, so a strict comparison keeps the lowest index on ties.
        per_feature.into_iter().flatten().fold(None, |best: Option<Candidate>, c| match best {
            Some(b) if c.gain <= b.gain => Some(b),
            _ => Some(c),
        })
    }

    fn stats(&self, rows: &[usize]) -> Stats {
        let mut s = Stats::default();
        for &r in rows {
            s.add(self.grad[r], self.hess[r]);
        }
        s
    }

    fn open(&self, nodes: &mut Vec<Node>, rows: Vec<usize>, depth: usize, can_split: bool) -> Open {
        let s = self.stats(&rows);
        let node = nodes.len();
        nodes.push(Node::Leaf { value: self.leaf_value(s), cover: s.h });
        let candidate = if can_split { self.best_split(&rows) } else { None };
        Open { node, rows, depth, candidate }
    }

    fn split(&self, nodes: &mut Vec<Node>, open: Open, policy: &Policy) -> (Open, Open) {
        let c = open.candidate.expect("split requires a candidate");
        let codes = &self.binned.bins[c.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = open.rows.iter().partition(|&&r| {
            let b = codes[r];
            if b == MISSING_BIN {
                c.default_left
            } else {
                b as usize <= c.cut
            }
        });
        let depth = open.depth + 1;
        let can = policy.may_split(depth);
        let l = self.open(nodes, left_rows, depth, can);
        let r = self.open(nodes, right_rows, depth, can);
        let cuts = &self.binned.cuts[c.feature];
        let threshold = cuts.get(c.cut).copied().unwrap_or(f64::INFINITY);
        nodes[open.node] = Node::Split {
            feature: c.feature,
            threshold,
            default_left: c.default_left,
            left: l.node,
            right: r.node,
            cover: c.left.h + c.right.h,
        };
        (l, r)
    }

    fn grow(&self, rows: Vec<usize>, policy: &Policy) -> Tree {
        let mut nodes = Vec::new();
        let root = self.open(&mut nodes, rows, 0, policy.may_split(0));
        match policy {
            Policy::LevelWise { .. } => {
                let mut stack = vec![root];
                while let Some(o) = stack.pop() {
                    if o.candidate.is_some() {
                        let (l, r) = self.split(&mut nodes, o, policy);
                        stack.push(r);
                        stack.push(l);
                    }
                }
            }
            Policy::LeafWise { num_leaves } => {
                let mut open = vec![root];
                let mut leaves = 1;
                while leaves < *num_leaves {
                    let pick = open
                        .iter()
                        .enumerate()
                        .filter_map(|(i, o)| o.candidate.map(|c| (i, c.gain, o.node)))
                        .fold(None, |best: Option<(usize, f64, usize)>, cur| match best {
                            Some(b) if cur.1 < b.1 || (cur.1 == b.1 && cur.2 > b.2) => Some(b),
                            _ => Some(cur),
                        });
                    let Some((i, _, _)) = pick else { break };
                    let o = open.swap_remove(i);
                    let (l, r) = self.split(&mut nodes, o, policy);
                    open.push(l);
                    open.push(r);
                    leaves += 1;
                }
            }
        }
        let mut tree = Tree { nodes };
        tree.sum_covers();
        tree
    }
}

enum Policy {
    LevelWise { max_depth: usize },
    LeafWise { num_leaves: usize },
}

impl Policy {
    fn may_split(&self, depth: usize) -> bool {
        match *self {
            Policy::LevelWise { max_depth } => depth < max_depth,
            Policy::LeafWise { num_leaves } => num_leaves > 1,
        }
    }
}

/// Mean binary cross-entropy of raw scores.
pub fn log_loss(raw: &[f64], y: &[u8]) -> f64 {
    let n = raw.len().max(1) as f64;
    raw.iter()
        .zip(y)
        .map(|(&z, &t)| {
            // log(1 + e^z) - t z, computed stably.
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - f64::from(t) * z
        })
        .sum::<f64>()
        / n
}

/// Trains a boosted ensemble; see the module docs for the objective.
pub fn train_gbdt(train: &Dataset, config: &TrainConfig) -> Result<TreeEnsemble, ModelError> {
    config.validate()?;
    if config.kind != ModelKind::Gbdt {
        return Err(ModelError::InvalidConfig("train_gbdt requires kind = gbdt".into()));
    }
    if train.is_empty() {
        return Err(ModelError::EmptyData);
    }
    check_labels(&train.y)?;

    let n = train.len();
    let p = train.n_features();
    let binned = BinnedMatrix::build(&train.x, config.histogram_bins);
    let mean = train.y.iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
    let mean = mean.clamp(1e-6, 1.0 - 1e-6);
    let base_score = (mean / (1.0 - mean)).ln();
    let policy = match config.growth_policy {
        GrowthPolicy::LevelWise => Policy::LevelWise { max_depth: config.max_depth.unwrap_or(6) },
        GrowthPolicy::LeafWise => Policy::LeafWise { num_leaves: config.num_leaves.unwrap_or(31) },
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut raw = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    let mut train_loss = Vec::with_capacity(config.n_estimators + 1);
    train_loss.push(log_loss(&raw, &train.y));

    let n_rows = ((config.subsample * n as f64).floor() as usize).clamp(1, n);
    let n_cols = ((config.colsample * p as f64).ceil() as usize).clamp(1, p.max(1));

    for _ in 0..config.n_estimators {
        for i in 0..n {
            let prob = sigmoid(raw[i]);
            grad[i] = prob - f64::from(train.y[i]);
            hess[i] = (prob * (1.0 - prob)).max(1e-16);
        }
        let mut rows: Vec<usize> = if n_rows < n { sample(&mut rng, n, n_rows).into_vec() } else { (0..n).collect() };
        rows.sort_unstable();
        let mut features: Vec<usize> =
            if n_cols < p { sample(&mut rng, p, n_cols).into_vec() } else { (0..p).collect() };
        features.sort_unstable();

        let grower = Grower {
            binned: &binned,
            grad: &grad,
            hess: &hess,
            features: &features,
            lambda: config.l2_regularization,
            min_child_weight: config.min_child_weight,
            learning_rate: config.learning_rate,
        };
        let tree = grower.grow(rows, &policy);
        for (i, r) in raw.iter_mut().enumerate() {
            *r += tree.predict(train.x.row(i));
        }
        train_loss.push(log_loss(&raw, &train.y));
        trees.push(tree);
    }

    Ok(TreeEnsemble {
        trees,
        base_score,
        objective: Objective::LogisticBoost,
        learning_rate: config.learning_rate,
        n_features: p,
        train_loss,
        config: Some(config.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{Matrix, MISSING};
    use crate::models::tree::Node;
    use rand::Rng;

    fn xor_data(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            rows.push([a, b]);
            y.push(u8::from((a > 0.5) != (b > 0.5)));
        }
        Dataset::new(Matrix::from_rows(&rows), y)
    }

    fn accuracy(e: &TreeEnsemble, d: &Dataset) -> f64 {
        let hits = d.x.rows().zip(&d.y).filter(|(r, &t)| u8::from(e.link(e.raw_output(r)) >= 0.5) == t).count();
        hits as f64 / d.len() as f64
    }

    #[test]
    fn pure_labels_raise_probability_and_lower_loss() {
        let d = Dataset::new(Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]), vec![1, 1, 1, 1]);
        let mut c = TrainConfig::gbdt_level_wise();
        c.n_estimators = 1;
        c.max_depth = Some(3);
        let e = train_gbdt(&d, &c).unwrap();
        assert!(d.x.rows().all(|r| e.link(e.raw_output(r)) > 0.7));
        assert!(e.train_loss[1] < e.train_loss[0]);
    }

    #[test]
    fn xor_is_learned_with_depth_two() {
        let d = xor_data(400, 1);
        for c in [
            TrainConfig { n_estimators: 60, max_depth: Some(2), learning_rate: 0.3, ..TrainConfig::gbdt_level_wise() },
            TrainConfig { n_estimators: 60, num_leaves: Some(4), learning_rate: 0.3, ..TrainConfig::gbdt_leaf_wise() },
        ] {
            let e = train_gbdt(&d, &c).unwrap();
            assert!(accuracy(&e, &d) >= 0.95, "{:?}: {}", c.growth_policy, accuracy(&e, &d));
        }
    }

    #[test]
    fn single_split_leaf_values_match_closed_form() {
        // Two label groups separated on one feature; base score 0 because labels are balanced.
        let d = Dataset::new(Matrix::from_rows(&[[0.0], [0.0], [1.0], [1.0]]), vec![0, 0, 1, 1]);
        let c = TrainConfig {
            n_estimators: 1,
            learning_rate: 1.0,
            max_depth: Some(1),
            l2_regularization: 1.0,
            min_child_weight: 0.0,
            ..TrainConfig::gbdt_level_wise()
        };
        let e = train_gbdt(&d, &c).unwrap();
        assert_eq!(e.base_score, 0.0);
        let t = &e.trees[0];
        // sigmoid(0) = 0.5: left G = 2 * 0.5 = 1, H = 2 * 0.25 = 0.5 -> -1 / 1.5.
        let Node::Split { threshold, left, right, cover, .. } = t.nodes[0] else { panic!("expected split") };
        assert_eq!(threshold, 0.5);
        assert_eq!(cover, 1.0);
        assert!(matches!(t.nodes[left], Node::Leaf { value, .. } if (value + 1.0 / 1.5).abs() < 1e-15));
        assert!(matches!(t.nodes[right], Node::Leaf { value, .. } if (value - 1.0 / 1.5).abs() < 1e-15));
    }

    #[test]
    fn loss_is_non_increasing_and_covers_add_up() {
        let d = xor_data(300, 5);
        for c in [
            TrainConfig { n_estimators: 40, ..TrainConfig::gbdt_level_wise() },
            TrainConfig { n_estimators: 40, ..TrainConfig::gbdt_leaf_wise() },
        ] {
            let e = train_gbdt(&d, &c).unwrap();
            for w in e.train_loss.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "{w:?}");
            }
            for t in &e.trees {
                for n in &t.nodes {
                    if let Node::Split { left, right, cover, .. } = *n {
                        assert_eq!(cover, t.nodes[left].cover() + t.nodes[right].cover());
                    }
                }
            }
        }
    }

    #[test]
    fn leaf_wise_respects_leaf_budget() {
        let d = xor_data(300, 9);
        let c = TrainConfig { n_estimators: 5, num_leaves: Some(5), ..TrainConfig::gbdt_leaf_wise() };
        let e = train_gbdt(&d, &c).unwrap();
        assert!(e.trees.iter().all(|t| t.n_leaves() <= 5));
        assert!(e.trees.iter().any(|t| t.n_leaves() == 5));
    }

    #[test]
    fn missing_values_learn_a_default_direction() {
        // Label is 1 exactly when the feature is missing.
        let rows: Vec<[f64; 1]> = (0..40).map(|i| if i % 2 == 0 { [MISSING] } else { [i as f64] }).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let c =
            TrainConfig { n_estimators: 20, max_depth: Some(1), learning_rate: 0.5, ..TrainConfig::gbdt_level_wise() };
        let e = train_gbdt(&d, &c).unwrap();
        assert_eq!(accuracy(&e, &d), 1.0);
    }

    #[test]
    fn constant_features_yield_single_leaf_trees() {
        let d = Dataset::new(Matrix::from_rows(&[[1.0], [1.0], [1.0]]), vec![0, 1, 1]);
        let c = TrainConfig { n_estimators: 3, ..TrainConfig::gbdt_level_wise() };
        let e = train_gbdt(&d, &c).unwrap();
        assert!(e.trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn rejects_non_binary_labels() {
        let d = Dataset::new(Matrix::from_rows(&[[1.0], [2.0]]), vec![0, 2]);
        assert!(matches!(
            train_gbdt(&d, &TrainConfig::gbdt_level_wise()),
            Err(ModelError::NonBinaryLabel { index: 1, value: 2 })
        ));
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let d = xor_data(200, 3);
        let c = TrainConfig { n_estimators: 10, subsample: 0.7, colsample: 0.5, ..TrainConfig::gbdt_level_wise() };
        assert_eq!(train_gbdt(&d, &c).unwrap(), train_gbdt(&d, &c).unwrap());
    }
}
