use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use tricheck_bench as fx;
use tricheck_core::harness::{evaluate, grid_search_thresholds, naive_grid_search, EvidenceInput, EvidenceRegime, ThresholdGrid};
use tricheck_core::retrieval::{build_index, retrieve_top_k, RetrievalMode};
use tricheck_core::uschema::{train, TrainConfig};
use tricheck_core::{HashedEmbedder, PatternExtractor, SentenceRef, TripleExtractor};

fn extraction(c: &mut Criterion) {
    let docs = fx::corpus(50, 4, 1);
    let sentences: Vec<(SentenceRef, &str)> = docs
        .iter()
        .flat_map(|d| d.sentences.iter().enumerate().map(|(i, s)| (SentenceRef::new(d.doc_id.clone(), i), s.as_str())))
        .collect();
    let extractor = PatternExtractor::default();
    c.bench_function("extract 200 sentences", |b| b.iter(|| extractor.extract(black_box(&sentences))));
}

fn retrieval(c: &mut Criterion) {
    let docs = fx::corpus(500, 4, 2);
    c.bench_function("index 2000 sentences", |b| b.iter(|| build_index(black_box(&docs)).unwrap()));
    let index = build_index(&docs).unwrap();
    let claims = fx::claims(20, 3);
    c.bench_function("tf-idf top-5 over 2000 sentences, 20 claims", |b| {
        b.iter(|| {
            for claim in &claims {
                black_box(retrieve_top_k(claim, &index, 5, RetrievalMode::TfIdfOnly, None).unwrap());
            }
        })
    });
}

fn verification(c: &mut Criterion) {
    let index = fx::index(100, 4, 4);
    let claims = fx::claims(50, 5);
    let plain = fx::baseline_pipeline();
    let kg = fx::kg(8, 6);
    let with_uschema = fx::uschema_pipeline(&kg, 64);
    let mut group = c.benchmark_group("verify");
    group.sample_size(20);
    group.bench_function("single claim, retrieved evidence", |b| {
        b.iter(|| plain.verify_claim(&claims[0], EvidenceInput::Retrieve(&index)).unwrap())
    });
    group.bench_function("evaluate 50 claims", |b| {
        b.iter(|| evaluate(&plain, &claims, &index, EvidenceRegime::Retrieved).unwrap())
    });
    group.bench_function("evaluate 50 claims with gap filling", |b| {
        b.iter(|| evaluate(&with_uschema, &claims, &index, EvidenceRegime::Retrieved).unwrap())
    });
    group.finish();
}

fn grid(c: &mut Criterion) {
    let index = fx::index(50, 4, 7);
    let claims = fx::claims(30, 8);
    let pipeline = fx::uschema_pipeline(&fx::kg(6, 9), 32);
    let grid = ThresholdGrid::uniform(0.1, 0.9, 3);
    let mut group = c.benchmark_group("grid search 27 points, 30 claims");
    group.sample_size(10);
    group.bench_function("cached scores", |b| {
        b.iter(|| grid_search_thresholds(&pipeline, &claims, &index, EvidenceRegime::Retrieved, &grid).unwrap())
    });
    group.bench_function("naive re-evaluation", |b| {
        b.iter(|| naive_grid_search(&pipeline, &claims, &index, EvidenceRegime::Retrieved, &grid).unwrap())
    });
    group.finish();
}

fn training(c: &mut Criterion) {
    let kg = fx::kg(20, 10);
    let cfg = TrainConfig { learning_rate: 0.01, max_epochs: 1, early_stopping: false, ..TrainConfig::default() };
    let mut group = c.benchmark_group("uschema");
    group.sample_size(10);
    group.bench_function(format!("one epoch over {} facts, d=64", kg.len()), |b| {
        b.iter_batched(
            || Arc::new(HashedEmbedder::new(64)),
            |provider| train(&kg, &[], provider, &cfg).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, extraction, retrieval, verification, grid, training);
criterion_main!(benches);
