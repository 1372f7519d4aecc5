use criterion::{criterion_group, criterion_main, Criterion};
use legis_bench::feature_matrix;
use legis_core::attribution::{brute_force_shap, shap_matrix, tree_shap};
use legis_core::matrix::Dataset;
use legis_core::models::{train, TrainConfig};

fn attribution(c: &mut Criterion) {
    let m = feature_matrix(150);
    let model = train(&m.dataset(), &TrainConfig::gbdt_leaf_wise()).expect("trains");
    let e = model.as_trees().expect("tree model");
    let row = m.x.row(0).to_vec();

    c.bench_function("tree_shap/one_row", |b| b.iter(|| tree_shap(e, &row).expect("shap")));
    c.bench_function("tree_shap/matrix", |b| {
        b.iter(|| shap_matrix(e, &m.x, &m.row_id_strings(), &m.feature_names).expect("shap"))
    });

    let small = TrainConfig { n_estimators: 10, ..TrainConfig::gbdt_level_wise() };
    let keep: Vec<usize> = (0..6).collect();
    let data = Dataset::new(m.x.select_cols(&keep), m.labels.clone());
    let e = train(&data, &small).expect("trains").as_trees().expect("tree model").clone();
    let row = data.x.row(0).to_vec();
    let mut group = c.benchmark_group("six_features");
    group.bench_function("tree_shap", |b| b.iter(|| tree_shap(&e, &row).expect("shap")));
    group.bench_function("brute_force", |b| b.iter(|| brute_force_shap(&e, &row).expect("shap")));
    group.finish();
}

criterion_group!(benches, attribution);
criterion_main!(benches);
