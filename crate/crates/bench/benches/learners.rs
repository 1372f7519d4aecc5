use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use legis_bench::feature_matrix;
use legis_core::models::{train, TrainConfig};

fn learners(c: &mut Criterion) {
    let data = feature_matrix(300).dataset();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    for cfg in [TrainConfig::gbdt_leaf_wise(), TrainConfig::gbdt_level_wise(), TrainConfig::rf(), TrainConfig::mlp()] {
        group.bench_with_input(BenchmarkId::from_parameter(cfg.label()), &cfg, |b, cfg| {
            b.iter(|| train(&data, cfg).expect("trains"))
        });
    }
    group.finish();
}

criterion_group!(benches, learners);
criterion_main!(benches);
