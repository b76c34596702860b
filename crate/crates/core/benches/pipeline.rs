//! Sequential versus data-parallel execution on the hot paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use threadscope::exec::Execution;
use threadscope::pipeline::{analyze_corpus, load_corpus, PipelineOptions};
use threadscope::stats::{scan_xmin_ks_with, ScanOptions};
use threadscope::synth::{generate_corpus_in_memory, sample_pareto, CorpusSpec};
use threadscope::thread::{build_thread, post_metrics};

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel { threads: 0 })]
}

fn corpus() -> (Vec<u8>, Vec<u8>) {
    let spec = CorpusSpec { seed: 11, n_posts: 20_000, popular_posts: 20, n_authors: 5_000, ..CorpusSpec::default() };
    let c = generate_corpus_in_memory(&spec).expect("bench corpus");
    (c.posts, c.comments)
}

fn bench_post_metrics(c: &mut Criterion) {
    let (posts, comments) = corpus();
    let opts = PipelineOptions::default();
    let loaded = load_corpus(posts.as_slice(), comments.as_slice(), &opts, Execution::Sequential).unwrap();
    let trees: Vec<_> = loaded.posts.into_iter().zip(loaded.groups).map(|(p, g)| build_thread(p, g)).collect();
    let mut g = c.benchmark_group("post_metrics");
    g.throughput(Throughput::Elements(trees.len() as u64));
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec.install(|| b.iter(|| black_box(exec.map(&trees, post_metrics))))
        });
    }
    g.finish();
}

fn bench_xmin_scan(c: &mut Criterion) {
    let x = sample_pareto(2.5, 1.0, 20_000, 3).unwrap();
    let mut g = c.benchmark_group("xmin_scan");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec.install(|| b.iter(|| black_box(scan_xmin_ks_with(&x, &ScanOptions::default(), exec).unwrap())))
        });
    }
    g.finish();
}

fn bench_full_analysis(c: &mut Criterion) {
    let (posts, comments) = corpus();
    let opts = PipelineOptions { chunk_comments: 16_384, ..PipelineOptions::default() };
    let mut g = c.benchmark_group("analyze_corpus");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            exec.install(|| {
                b.iter(|| {
                    let loaded = load_corpus(posts.as_slice(), comments.as_slice(), &opts, exec).unwrap();
                    black_box(analyze_corpus(loaded, &opts, exec).posts.len())
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_post_metrics, bench_xmin_scan, bench_full_analysis);
criterion_main!(benches);
