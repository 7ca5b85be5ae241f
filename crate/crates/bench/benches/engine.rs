use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use moralmap_bench::dialect_corpus;
use moralmap_core::cluster::{kmeans, silhouette, KmeansConfig};
use moralmap_core::framing::{self, EmbeddingMode, Scorer};
use moralmap_core::tsne::{tsne, TsneConfig};

fn scoring(c: &mut Criterion) {
    let corpus = dialect_corpus(1, 2000);
    let axes = framing::build_axes(&corpus.lexicon, &corpus.table).unwrap();
    let scorer = Scorer::new(&corpus.lexicon, &axes, &corpus.table);

    let mut group = c.benchmark_group("scoring");
    group.throughput(criterion::Throughput::Elements(
        corpus.documents.len() as u64
    ));
    group.bench_function("score_2000_docs", |b| {
        b.iter(|| {
            for (i, tokens) in corpus.documents.iter().enumerate() {
                black_box(scorer.score(&i.to_string(), tokens));
            }
        })
    });
    group.finish();
}

fn embedding_points(n: usize) -> Vec<Vec<f64>> {
    let corpus = dialect_corpus(2, n);
    let axes = framing::build_axes(&corpus.lexicon, &corpus.table).unwrap();
    let scorer = Scorer::new(&corpus.lexicon, &axes, &corpus.table);
    corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, tokens)| {
            let score = scorer.score(&i.to_string(), tokens).unwrap();
            framing::embed(&score, EmbeddingMode::Poles).values.to_vec()
        })
        .collect()
}

fn clustering(c: &mut Criterion) {
    let points = embedding_points(2000);
    let mut group = c.benchmark_group("clustering");
    group.sample_size(20);
    for k in [2usize, 4, 8] {
        group.bench_with_input(BenchmarkId::new("kmeans_2000x10", k), &k, |b, &k| {
            b.iter(|| black_box(kmeans(&points, &KmeansConfig::new(k, 7)).unwrap()))
        });
    }
    let model = kmeans(&points, &KmeansConfig::new(4, 7)).unwrap();
    group.bench_function("silhouette_2000x10", |b| {
        b.iter(|| black_box(silhouette(&points, &model.labels, None, 7).unwrap()))
    });
    group.finish();
}

fn projection(c: &mut Criterion) {
    let points = embedding_points(300);
    let config = TsneConfig {
        perplexity: 20.0,
        iterations: 250,
        seed: 5,
        ..TsneConfig::default()
    };
    let mut group = c.benchmark_group("projection");
    group.sample_size(10);
    group.bench_function("tsne_300x10_250iters", |b| {
        b.iter(|| black_box(tsne(&points, &config).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, scoring, clustering, projection);
criterion_main!(benches);
