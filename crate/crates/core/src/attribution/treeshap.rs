//! Exact path-dependent TreeSHAP and a brute-force Shapley oracle over the same value function.
//!
//! The value of a coalition `S` is the conditional expectation of the raw output where
//! features in `S` follow the row and all other splits average their children by cover.

use super::AttributionError;
use crate::models::tree::{goes_left, Node, Tree, TreeEnsemble};

/// Largest number of active features the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 15;

const NO_FEATURE: usize = usize::MAX;

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: usize,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: usize) {
    let depth = path.len();
    path.push(PathElement { feature, zero_fraction, one_fraction, weight: if depth == 0 { 1.0 } else { 0.0 } });
    let d1 = (depth + 1) as f64;
    for i in (0..depth).rev() {
        path[i + 1].weight += one_fraction * path[i].weight * (i + 1) as f64 / d1;
        path[i].weight = zero_fraction * path[i].weight * (depth - i) as f64 / d1;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let depth = path.len() - 1;
    let PathElement { zero_fraction, one_fraction, .. } = path[index];
    let d1 = (depth + 1) as f64;
    let mut next = path[depth].weight;
    for i in (0..depth).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * d1 / ((i + 1) as f64 * one_fraction);
            next = tmp - path[i].weight * zero_fraction * (depth - i) as f64 / d1;
        } else {
            path[i].weight = path[i].weight * d1 / (zero_fraction * (depth - i) as f64);
        }
    }
    for i in index..depth {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

/// Total path weight if element `index` were unwound, without modifying the path.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let depth = path.len() - 1;
    let PathElement { zero_fraction, one_fraction, .. } = path[index];
    let mut total = 0.0;
    if one_fraction != 0.0 {
        let mut next = path[depth].weight;
        for i in (0..depth).rev() {
            let tmp = next / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next = path[i].weight - tmp * zero_fraction * (depth - i) as f64;
        }
    } else {
        for i in (0..depth).rev() {
            total += path[i].weight / (zero_fraction * (depth - i) as f64);
        }
    }
    total * (depth + 1) as f64
}

struct Recursion<'a> {
    tree: &'a Tree,
    row: &'a [f64],
    phi: &'a mut [f64],
    scale: f64,
}

impl Recursion<'_> {
    fn run(&mut self, node: usize, mut path: Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: usize) {
        extend(&mut path, zero_fraction, one_fraction, feature);
        match self.tree.nodes[node] {
            Node::Leaf { value, .. } => {
                for i in 1..path.len() {
                    let w = unwound_sum(&path, i);
                    let e = path[i];
                    self.phi[e.feature] += w * (e.one_fraction - e.zero_fraction) * value * self.scale;
                }
            }
            Node::Split { feature: f, threshold, default_left, left, right, cover } => {
                let (hot, cold) =
                    if goes_left(self.row[f], threshold, default_left) { (left, right) } else { (right, left) };
                let hot_zero = self.tree.nodes[hot].cover() / cover;
                let cold_zero = self.tree.nodes[cold].cover() / cover;
                let (mut in_zero, mut in_one) = (1.0, 1.0);
                if let Some(k) = path.iter().position(|e| e.feature == f) {
                    in_zero = path[k].zero_fraction;
                    in_one = path[k].one_fraction;
                    unwind(&mut path, k);
                }
                if hot_zero * in_zero != 0.0 || in_one != 0.0 {
                    self.run(hot, path.clone(), hot_zero * in_zero, in_one, f);
                }
                if cold_zero * in_zero != 0.0 {
                    self.run(cold, path, cold_zero * in_zero, 0.0, f);
                }
            }
        }
    }
}

/// Adds `scale ×` the attributions of one tree for `row` into `phi`.
pub fn tree_shap_single(tree: &Tree, row: &[f64], scale: f64, phi: &mut [f64]) {
    if tree.nodes.is_empty() {
        return;
    }
    let depth = tree.depth();
    let mut r = Recursion { tree, row, phi, scale };
    r.run(0, Vec::with_capacity(depth + 2), 1.0, 1.0, NO_FEATURE);
}

fn check(ensemble: &TreeEnsemble, row: &[f64]) -> Result<(), AttributionError> {
    if row.len() != ensemble.n_features {
        return Err(AttributionError::WidthMismatch { expected: ensemble.n_features, found: row.len() });
    }
    ensemble.validate().map_err(AttributionError::InvalidModel)
}

/// Attributions of `row` and the base value (expected raw output under the covers).
pub fn tree_shap(ensemble: &TreeEnsemble, row: &[f64]) -> Result<(Vec<f64>, f64), AttributionError> {
    check(ensemble, row)?;
    Ok((tree_shap_unchecked(ensemble, row), ensemble.expected_value()))
}

pub(crate) fn tree_shap_unchecked(ensemble: &TreeEnsemble, row: &[f64]) -> Vec<f64> {
    let mut phi = vec![0.0; ensemble.n_features];
    let scale = ensemble.tree_scale();
    for t in &ensemble.trees {
        tree_shap_single(t, row, scale, &mut phi);
    }
    phi
}

fn conditional_expectation(tree: &Tree, node: usize, row: &[f64], fixed: &[bool]) -> f64 {
    match tree.nodes[node] {
        Node::Leaf { value, .. } => value,
        Node::Split { feature, threshold, default_left, left, right, cover } => {
            if fixed[feature] {
                let next = if goes_left(row[feature], threshold, default_left) { left } else { right };
                conditional_expectation(tree, next, row, fixed)
            } else {
                let l = tree.nodes[left].cover() * conditional_expectation(tree, left, row, fixed);
                let r = tree.nodes[right].cover() * conditional_expectation(tree, right, row, fixed);
                (l + r) / cover
            }
        }
    }
}

/// Coalition value: expected raw output with only the features flagged in `fixed` known.
pub fn coalition_value(ensemble: &TreeEnsemble, row: &[f64], fixed: &[bool]) -> f64 {
    let sum: f64 =
        ensemble.trees.iter().filter(|t| !t.nodes.is_empty()).map(|t| conditional_expectation(t, 0, row, fixed)).sum();
    ensemble.base_score + ensemble.tree_scale() * sum
}

/// Shapley values by enumerating every coalition of the features the ensemble splits on.
pub fn brute_force_shap(ensemble: &TreeEnsemble, row: &[f64]) -> Result<Vec<f64>, AttributionError> {
    check(ensemble, row)?;
    let mut active: Vec<usize> = ensemble.trees.iter().flat_map(|t| t.used_features()).collect();
    active.sort_unstable();
    active.dedup();
    let m = active.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(AttributionError::TooManyFeatures { count: m, limit: BRUTE_FORCE_LIMIT });
    }
    let mut fixed = vec![false; ensemble.n_features];
    let values: Vec<f64> = (0..1usize << m)
        .map(|mask| {
            for (b, &f) in active.iter().enumerate() {
                fixed[f] = mask & (1 << b) != 0;
            }
            coalition_value(ensemble, row, &fixed)
        })
        .collect();
    // weight[s] = s! (m - s - 1)! / m!
    let mut fact = vec![1.0f64; m + 1];
    for i in 1..=m {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; ensemble.n_features];
    for (b, &f) in active.iter().enumerate() {
        let bit = 1 << b;
        let mut acc = 0.0;
        for mask in (0..1usize << m).filter(|s| s & bit == 0) {
            let s = mask.count_ones() as usize;
            acc += fact[s] * fact[m - s - 1] / fact[m] * (values[mask | bit] - values[mask]);
        }
        phi[f] = acc;
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::Objective;

    fn stump(feature: usize, thr: f64, lo: f64, hi: f64, n_features: usize) -> TreeEnsemble {
        let tree = Tree {
            nodes: vec![
                Node::Split { feature, threshold: thr, default_left: true, left: 1, right: 2, cover: 2.0 },
                Node::Leaf { value: lo, cover: 1.0 },
                Node::Leaf { value: hi, cover: 1.0 },
            ],
        };
        TreeEnsemble { trees: vec![tree], ..TreeEnsemble::empty(Objective::LogisticBoost, 0.0, n_features) }
    }

    #[test]
    fn single_leaf_has_zero_attribution() {
        let e =
            TreeEnsemble { trees: vec![Tree::leaf(0.8, 3.0)], ..TreeEnsemble::empty(Objective::LogisticBoost, 0.0, 3) };
        let (phi, base) = tree_shap(&e, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(phi, vec![0.0; 3]);
        assert!((base - 0.8).abs() < 1e-12);
        assert_eq!(brute_force_shap(&e, &[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn stump_carries_full_deviation() {
        let e = stump(1, 0.5, -1.0, 1.0, 3);
        let (phi, base) = tree_shap(&e, &[0.0, 0.9, 0.0]).unwrap();
        assert_eq!(base, 0.0);
        assert_eq!(phi, vec![0.0, 1.0, 0.0]);
        assert_eq!(brute_force_shap(&e, &[0.0, 0.9, 0.0]).unwrap(), phi);
    }

    #[test]
    fn repeated_feature_on_path() {
        // f0 < 0.5 then f0 < 0.25 on the left, f1 on the right.
        let tree = Tree {
            nodes: vec![
                Node::Split { feature: 0, threshold: 0.5, default_left: true, left: 1, right: 4, cover: 10.0 },
                Node::Split { feature: 0, threshold: 0.25, default_left: false, left: 2, right: 3, cover: 6.0 },
                Node::Leaf { value: 3.0, cover: 2.0 },
                Node::Leaf { value: -1.0, cover: 4.0 },
                Node::Split { feature: 1, threshold: 0.0, default_left: true, left: 5, right: 6, cover: 4.0 },
                Node::Leaf { value: 0.5, cover: 1.0 },
                Node::Leaf { value: 2.0, cover: 3.0 },
            ],
        };
        let e = TreeEnsemble { trees: vec![tree], ..TreeEnsemble::empty(Objective::LogisticBoost, 0.2, 2) };
        for row in [[0.1, 1.0], [0.3, -1.0], [0.7, -1.0], [0.9, f64::NAN], [f64::NAN, 2.0]] {
            let (phi, base) = tree_shap(&e, &row).unwrap();
            let bf = brute_force_shap(&e, &row).unwrap();
            for (a, b) in phi.iter().zip(&bf) {
                assert!((a - b).abs() < 1e-12, "{row:?}: {phi:?} vs {bf:?}");
            }
            assert!((base + phi.iter().sum::<f64>() - e.raw_output(&row)).abs() < 1e-12);
        }
    }

    #[test]
    fn guard_rejects_wide_ensembles() {
        let trees = (0..16).map(|f| stump(f, 0.0, -1.0, 1.0, 16).trees.remove(0)).collect();
        let e = TreeEnsemble { trees, ..TreeEnsemble::empty(Objective::LogisticBoost, 0.0, 16) };
        assert!(matches!(
            brute_force_shap(&e, &[0.0; 16]),
            Err(AttributionError::TooManyFeatures { count: 16, limit: 15 })
        ));
    }

    #[test]
    fn invalid_model_is_reported() {
        let mut e = stump(0, 0.5, -1.0, 1.0, 1);
        if let Node::Split { cover, .. } = &mut e.trees[0].nodes[0] {
            *cover = 0.0;
        }
        assert!(matches!(tree_shap(&e, &[0.0]), Err(AttributionError::InvalidModel(_))));
    }
}
