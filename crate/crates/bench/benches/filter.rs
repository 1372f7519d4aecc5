use criterion::{criterion_group, criterion_main, Criterion};
use legis_bench::corpus;
use legis_core::llmfilter::{
    extract_keywords, keyword_select, run_pipeline, FilterContext, PipelineOptions, PromptSet, RuleMock,
};

fn filter(c: &mut Criterion) {
    let corpus = corpus(1000);
    let mock = RuleMock::new(PromptSet::default());
    let ctx = FilterContext::new(&mock);
    let lexicon = extract_keywords(&corpus.bills, &ctx, 20).expect("lexicon");

    c.bench_function("keyword_select/1000", |b| b.iter(|| keyword_select(&corpus.bills, &lexicon)));
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("mock/1000", |b| {
        b.iter(|| run_pipeline(&corpus.bills, &ctx, &PipelineOptions::default()).expect("pipeline"))
    });
    group.finish();
}

criterion_group!(benches, filter);
criterion_main!(benches);
