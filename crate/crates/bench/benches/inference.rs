//! Hot paths of variational inference: the scalar Kalman smoother, chain
//! ELBO/gradient evaluation, a full conjugate-gradient chain update, one
//! document's coordinate ascent, and a whole small fit.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use leadlag_bench::{random_chain, random_counts, random_document, small_corpus};
use leadlag_core::jdtm::{
    chain_elbo_and_gradient, fit, kalman_smooth, update_chain, update_document, ChainRead,
    DocOptions,
};

fn bench_smoother(c: &mut Criterion) {
    let obs: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).sin()).collect();
    c.bench_function("kalman_smooth_s10", |b| {
        b.iter(|| kalman_smooth(black_box(&obs), 0.1, 0.5))
    });
}

fn bench_chain_gradient(c: &mut Criterion) {
    let (s_len, vocab) = (10, 1000);
    let chain = random_chain(s_len, vocab, 21);
    let counts = random_counts(s_len, vocab, 21);
    c.bench_function("chain_elbo_and_gradient_s10_v1000", |b| {
        b.iter(|| chain_elbo_and_gradient(black_box(&chain), black_box(&counts)).unwrap())
    });
}

fn bench_chain_update(c: &mut Criterion) {
    let (s_len, vocab) = (10, 1000);
    let chain = random_chain(s_len, vocab, 22);
    let counts = random_counts(s_len, vocab, 22);
    c.bench_function("update_chain_s10_v1000", |b| {
        b.iter_batched(
            || chain.clone(),
            |mut ch| update_chain(&mut ch, black_box(&counts)).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn bench_document_update(c: &mut Criterion) {
    let topics = 20;
    let chains: Vec<_> = (0..topics)
        .map(|i| random_chain(4, 300, 100 + i as u64))
        .collect();
    let reads: Vec<(&dyn ChainRead, usize)> =
        chains.iter().map(|ch| (ch as &dyn ChainRead, 2)).collect();
    let doc = random_document(300, 50, 9);
    let opts = DocOptions {
        max_iter: 60,
        tol: 1e-8,
    };
    c.bench_function("update_document_t20_w50", |b| {
        b.iter(|| update_document(black_box(&doc), &reads, 0.1, opts, None).unwrap())
    });
}

fn bench_fit(c: &mut Criterion) {
    let (corpus, cfg) = small_corpus();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("fit_3_sweeps_t4_v100", |b| {
        b.iter(|| fit(black_box(&corpus), black_box(&cfg)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_smoother,
    bench_chain_gradient,
    bench_chain_update,
    bench_document_update,
    bench_fit
);
criterion_main!(benches);
