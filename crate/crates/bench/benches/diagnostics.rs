//! Causality diagnostics: lagged cross-correlation and convergent cross
//! mapping over chaotic series of realistic lengths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use leadlag_bench::coupled_series;
use leadlag_core::diagnostics::{ccm, lagged_ccf, CcmOptions};

fn bench_ccf(c: &mut Criterion) {
    let (x, y) = coupled_series(500);
    c.bench_function("lagged_ccf_n500_l10", |b| {
        b.iter(|| lagged_ccf(black_box(&x), black_box(&y), 10).unwrap())
    });
}

fn bench_ccm(c: &mut Criterion) {
    let (x, y) = coupled_series(300);
    let opts = CcmOptions {
        surrogates: 50,
        ..CcmOptions::default()
    };
    let mut group = c.benchmark_group("ccm");
    group.sample_size(10);
    group.bench_function("ccm_n300_s50", |b| {
        b.iter(|| ccm(black_box(&x), black_box(&y), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_ccf, bench_ccm);
criterion_main!(benches);
