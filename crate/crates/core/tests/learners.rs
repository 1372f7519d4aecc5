use legis_core::matrix::{Dataset, Matrix, MISSING};
use legis_core::models::{train, Model, Node, Objective, TrainConfig, TreeEnsemble};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noisy_blobs(n: usize, p: usize, missing: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let label = u8::from(rng.random_bool(0.5));
        let shift = if label == 1 { 0.6 } else { 0.0 };
        let row: Vec<f64> = (0..p)
            .map(|_| if rng.random_bool(missing) { MISSING } else { rng.random_range(0.0..1.0) + shift })
            .collect();
        rows.push(row);
        y.push(label);
    }
    Dataset::new(Matrix::from_rows(&rows), y)
}

fn check_covers(e: &TreeEnsemble, n_rows: f64, forest: bool) {
    for t in &e.trees {
        for node in &t.nodes {
            if let Node::Split { left, right, cover, .. } = node {
                let sum = t.nodes[*left].cover() + t.nodes[*right].cover();
                assert!((sum - cover).abs() < 1e-9, "children cover {sum}, parent {cover}");
            }
        }
        if !forest {
            assert!(t.root().cover() > 0.0 && t.root().cover() <= n_rows + 1e-9);
        }
    }
}

#[test]
fn split_covers_equal_the_sum_of_their_children() {
    let data = noisy_blobs(300, 4, 0.1, 1);
    for cfg in [TrainConfig::gbdt_leaf_wise(), TrainConfig::gbdt_level_wise(), TrainConfig::rf()] {
        let e = train(&data, &TrainConfig { n_estimators: 15, ..cfg.clone() }).unwrap().as_trees().unwrap().clone();
        check_covers(&e, 300.0, cfg.label() == "rf");
        e.validate().unwrap();
    }
}

#[test]
fn forest_probability_is_the_mean_leaf_frequency() {
    let data = noisy_blobs(200, 3, 0.05, 2);
    let model = train(&data, &TrainConfig { n_estimators: 25, ..TrainConfig::rf() }).unwrap();
    let e = model.as_trees().unwrap();
    assert_eq!(e.objective, Objective::ClassificationForest);
    let proba = model.predict_proba(&data.x).unwrap();
    for (i, row) in data.x.rows().enumerate() {
        let mean = e.trees.iter().map(|t| t.predict(row)).sum::<f64>() / e.trees.len() as f64;
        assert!((proba[i] - mean).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&proba[i]));
    }
    for t in &e.trees {
        for n in &t.nodes {
            if let Node::Leaf { value, .. } = n {
                assert!((0.0..=1.0).contains(value));
            }
        }
    }
}

#[test]
fn missing_values_follow_the_default_direction() {
    let data = noisy_blobs(300, 2, 0.2, 3);
    let model = train(&data, &TrainConfig { n_estimators: 5, ..TrainConfig::gbdt_level_wise() }).unwrap();
    let e = model.as_trees().unwrap();
    let all_missing = [MISSING, MISSING];
    for t in &e.trees {
        let mut i = 0;
        while let Node::Split { default_left, left, right, .. } = t.nodes[i] {
            i = if default_left { left } else { right };
        }
        assert_eq!(t.leaf_index(&all_missing), i);
    }
}

#[test]
fn boosting_loss_never_increases() {
    for seed in 0..5 {
        let data = noisy_blobs(400, 5, 0.1, seed);
        for cfg in [TrainConfig::gbdt_leaf_wise(), TrainConfig::gbdt_level_wise()] {
            let e = train(&data, &TrainConfig { n_estimators: 40, seed, ..cfg }).unwrap().as_trees().unwrap().clone();
            assert_eq!(e.train_loss.len(), e.trees.len() + 1);
            assert!(e.train_loss.windows(2).all(|w| w[1] <= w[0]), "{:?}", e.train_loss);
        }
    }
}

#[test]
fn models_round_trip_through_text() {
    let data = noisy_blobs(150, 3, 0.0, 4);
    for cfg in [
        TrainConfig { n_estimators: 8, ..TrainConfig::gbdt_leaf_wise() },
        TrainConfig { n_estimators: 8, ..TrainConfig::rf() },
        TrainConfig { max_epochs: 10, ..TrainConfig::mlp() },
    ] {
        let model = train(&data, &cfg).unwrap();
        let back = Model::from_text(&model.to_text()).unwrap();
        let (a, b) = (model.predict_proba(&data.x).unwrap(), back.predict_proba(&data.x).unwrap());
        assert_eq!(a, b, "{}", cfg.label());
    }
}

#[test]
fn training_is_deterministic_under_a_seed() {
    let data = noisy_blobs(200, 4, 0.1, 5);
    for cfg in [
        TrainConfig { n_estimators: 10, subsample: 0.8, colsample: 0.5, ..TrainConfig::gbdt_leaf_wise() },
        TrainConfig { n_estimators: 10, ..TrainConfig::rf() },
    ] {
        assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leaf_wise_trees_respect_the_leaf_budget(leaves in 2usize..12, seed in 0u64..1000) {
        let data = noisy_blobs(120, 3, 0.1, seed);
        let cfg = TrainConfig { n_estimators: 3, num_leaves: Some(leaves), seed, ..TrainConfig::gbdt_leaf_wise() };
        let e = train(&data, &cfg).unwrap().as_trees().unwrap().clone();
        for t in &e.trees {
            prop_assert!(t.n_leaves() <= leaves);
        }
    }

    #[test]
    fn level_wise_trees_respect_the_depth_limit(depth in 1usize..6, seed in 0u64..1000) {
        let data = noisy_blobs(120, 3, 0.1, seed);
        let cfg = TrainConfig { n_estimators: 3, max_depth: Some(depth), seed, ..TrainConfig::gbdt_level_wise() };
        let e = train(&data, &cfg).unwrap().as_trees().unwrap().clone();
        for t in &e.trees {
            prop_assert!(t.depth() <= depth);
        }
    }
}
