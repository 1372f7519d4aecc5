//! Random forest of Gini classification trees.
//!
//! Each tree sees a bootstrap sample (as integer row weights) and tries a random subset of
//! features at every split. Leaves store the weighted positive-class frequency, so the forest
//! probability is the mean leaf value over trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{Node, Objective, Tree, TreeEnsemble};
use super::{check_labels, ModelError, ModelKind, TrainConfig};
use crate::matrix::{is_missing, Dataset};

const MIN_DECREASE: f64 = 1e-12;

/// Gini impurity of a node with `pos` positive out of `total` (weighted) samples.
pub fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    w: f64,
    pos: f64,
}

impl Counts {
    fn add(&mut self, w: f64, y: u8) {
        self.w += w;
        self.pos += w * f64::from(y);
    }

    fn plus(self, o: Counts) -> Counts {
        Counts { w: self.w + o.w, pos: self.pos + o.pos }
    }

    fn minus(self, o: Counts) -> Counts {
        Counts { w: self.w - o.w, pos: self.pos - o.pos }
    }

    fn weighted_impurity(self) -> f64 {
        self.w * gini(self.pos, self.w)
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    default_left: bool,
    decrease: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    weights: Vec<f64>,
    max_depth: Option<usize>,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn counts(&self, rows: &[usize]) -> Counts {
        let mut c = Counts::default();
        for &r in rows {
            c.add(self.weights[r], self.data.y[r]);
        }
        c
    }

    /// Best split on one feature, or `None` if the feature is constant within the node.
    fn best_on_feature(&self, f: usize, rows: &[usize], total: Counts) -> Option<Option<Split>> {
        let mut present: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
        let mut missing = Counts::default();
        for &r in rows {
            let v = self.data.x.get(r, f);
            if is_missing(v) {
                missing.add(self.weights[r], self.data.y[r]);
            } else {
                present.push((v, r));
            }
        }
        present.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let distinct_present = present.windows(2).any(|w| w[0].0 < w[1].0);
        if !distinct_present && (missing.w == 0.0 || present.is_empty()) {
            return None;
        }
        let parent = total.weighted_impurity();
        let non_missing = total.minus(missing);
        let mut best: Option<Split> = None;
        let mut consider = |threshold: f64, default_left: bool, l: Counts, r: Counts| {
            if l.w <= 0.0 || r.w <= 0.0 {
                return;
            }
            let decrease = parent - l.weighted_impurity() - r.weighted_impurity();
            if decrease > MIN_DECREASE && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(Split { feature: f, threshold, default_left, decrease });
            }
        };
        let mut acc = Counts::default();
        for i in 0..present.len() {
            let (v, r) = present[i];
            acc.add(self.weights[r], self.data.y[r]);
            let Some(&(next, _)) = present.get(i + 1) else { break };
            if next <= v {
                continue;
            }
            let threshold = v + (next - v) / 2.0;
            let threshold = if threshold > v { threshold } else { next };
            let right = non_missing.minus(acc);
            if missing.w == 0.0 {
                consider(threshold, acc.w >= right.w, acc, right);
            } else {
                consider(threshold, true, acc.plus(missing), right);
                consider(threshold, false, acc, right.plus(missing));
            }
        }
        if missing.w > 0.0 && non_missing.w > 0.0 {
            consider(f64::INFINITY, false, non_missing, missing);
        }
        Some(best)
    }

    fn find_split(&mut self, rows: &[usize], total: Counts) -> Option<Split> {
        let p = self.data.n_features();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut self.rng);
        // Draw features until `mtry` non-constant ones have been tried.
        let mut tried = Vec::with_capacity(self.mtry);
        let mut results = Vec::new();
        for f in order {
            if tried.len() == self.mtry {
                break;
            }
            if let Some(s) = self.best_on_feature(f, rows, total) {
                tried.push(f);
                results.push(s);
            }
        }
        // Lower feature index wins ties regardless of draw order.
        let mut best: Option<Split> = None;
        for s in results.into_iter().flatten() {
            let better = match &best {
                None => true,
                Some(b) => s.decrease > b.decrease || (s.decrease == b.decrease && s.feature < b.feature),
            };
            if better {
                best = Some(s);
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let total = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: if total.w > 0.0 { total.pos / total.w } else { 0.0 }, cover: total.w });
        let pure = total.pos == 0.0 || total.pos == total.w;
        if pure || rows.len() < 2 || self.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let Some(split) = self.find_split(&rows, total) else { return id };
        let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| {
            let v = self.data.x.get(i, split.feature);
            if is_missing(v) {
                split.default_left
            } else {
                v < split.threshold
            }
        });
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            default_left: split.default_left,
            left,
            right,
            cover: total.w,
        };
        id
    }
}

fn grow_tree(data: &Dataset, config: &TrainConfig, mtry: usize, t: usize) -> Tree {
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(t as u64);
    let weights = if config.bootstrap {
        let mut w = vec![0.0; n];
        for _ in 0..n {
            w[rng.random_range(0..n)] += 1.0;
        }
        w
    } else {
        vec![1.0; n]
    };
    let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let mut b = Builder { data, weights, max_depth: config.max_depth, mtry, rng, nodes: Vec::new() };
    b.build(rows, 0);
    let mut tree = Tree { nodes: b.nodes };
    tree.sum_covers();
    tree
}

pub fn train_rf(train: &Dataset, config: &TrainConfig) -> Result<TreeEnsemble, ModelError> {
    config.validate()?;
    if config.kind != ModelKind::Rf {
        return Err(ModelError::InvalidConfig("train_rf requires kind = rf".into()));
    }
    if train.is_empty() {
        return Err(ModelError::EmptyData);
    }
    check_labels(&train.y)?;
    let p = train.n_features();
    let mtry = config.max_features.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p.max(1));
    let trees: Vec<Tree> =
        (0..config.n_estimators).into_par_iter().map(|t| grow_tree(train, config, mtry, t)).collect();
    Ok(TreeEnsemble {
        trees,
        base_score: 0.0,
        objective: Objective::ClassificationForest,
        learning_rate: 1.0,
        n_features: p,
        train_loss: Vec::new(),
        config: Some(config.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{Matrix, MISSING};

    #[test]
    fn gini_boundaries() {
        assert_eq!(gini(5.0, 10.0), 0.5);
        assert_eq!(gini(10.0, 10.0), 0.0);
        assert_eq!(gini(0.0, 10.0), 0.0);
    }

    #[test]
    fn single_unbootstrapped_tree_memorises_separable_data() {
        let rows: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, (i * 7 % 11) as f64]).collect();
        let y: Vec<u8> = (0..50).map(|i| u8::from(i % 3 == 0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y.clone());
        let c = TrainConfig { n_estimators: 1, bootstrap: false, max_depth: None, ..TrainConfig::rf() };
        let e = train_rf(&d, &c).unwrap();
        let pred: Vec<u8> = d.x.rows().map(|r| u8::from(e.raw_output(r) >= 0.5)).collect();
        assert_eq!(pred, y);
    }

    #[test]
    fn informative_feature_is_chosen_at_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y: Vec<u8> = (0..200).map(|i| u8::from(i % 2 == 0)).collect();
        let rows: Vec<[f64; 2]> = y.iter().map(|&t| [f64::from(t), rng.random()]).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let c = TrainConfig { n_estimators: 100, max_features: Some(2), ..TrainConfig::rf() };
        let e = train_rf(&d, &c).unwrap();
        let hits = e.trees.iter().filter(|t| matches!(t.nodes[0], Node::Split { feature: 0, .. })).count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn probability_is_mean_of_leaf_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<[f64; 3]> = (0..120)
            .map(|_| [rng.random(), rng.random(), if rng.random_bool(0.2) { MISSING } else { rng.random() }])
            .collect();
        let y: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 1.0)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let e = train_rf(&d, &TrainConfig { n_estimators: 25, ..TrainConfig::rf() }).unwrap();
        for r in d.x.rows() {
            let naive = e.trees.iter().map(|t| match t.nodes[t.leaf_index(r)] {
                Node::Leaf { value, .. } => value,
                _ => unreachable!(),
            });
            let naive = naive.sum::<f64>() / 25.0;
            let p = e.raw_output(r);
            assert!((p - naive).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(e.trees.iter().all(|t| t.depth() <= 8));
    }

    #[test]
    fn forest_is_deterministic_across_thread_schedules() {
        let rows: Vec<[f64; 2]> = (0..80).map(|i| [(i * 13 % 17) as f64, (i % 5) as f64]).collect();
        let y: Vec<u8> = (0..80).map(|i| u8::from(i % 4 < 2)).collect();
        let d = Dataset::new(Matrix::from_rows(&rows), y);
        let c = TrainConfig { n_estimators: 20, ..TrainConfig::rf() };
        let a = train_rf(&d, &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| train_rf(&d, &c).unwrap());
        assert_eq!(a, b);
    }
}
