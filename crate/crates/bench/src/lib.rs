//! Deterministic fixtures shared by the criterion benches: random chains and
//! count tables at inference scales, a small synthetic corpus pair, and the
//! coupled chaotic series used to exercise the causality diagnostics.

use leadlag_core::jdtm::{ChainCounts, ModelConfig, TopicChain};
use leadlag_core::seeding::rng_for;
use leadlag_core::synthgen::{generate_scenario1, GenConfig};
use leadlag_core::types::{ChainSpan, Side, TopicKind};
use leadlag_core::{CorpusPair, Document};
use rand::Rng;

/// Random-walk topic chain with uniform-random natural parameters.
pub fn random_chain(s_len: usize, vocab: usize, seed: u64) -> TopicChain {
    let mut rng = rng_for(seed, &[1]);
    let alpha: Vec<f64> = (0..s_len * vocab)
        .map(|_| rng.random_range(-2.0..2.0))
        .collect();
    TopicChain::new(
        TopicKind::LeadSpecific,
        0,
        ChainSpan::specific(s_len as u32),
        vocab,
        0.1,
        1.0,
        alpha,
    )
    .unwrap()
}

/// Dense expected-count table matching [`random_chain`]'s shape.
pub fn random_counts(s_len: usize, vocab: usize, seed: u64) -> ChainCounts {
    let mut rng = rng_for(seed, &[2]);
    let n: Vec<f64> = (0..s_len * vocab)
        .map(|_| rng.random_range(0.0..5.0))
        .collect();
    ChainCounts::from_dense(n, vocab)
}

/// Bag-of-words document with `distinct` distinct word types.
pub fn random_document(vocab: u32, distinct: usize, seed: u64) -> Document {
    let mut rng = rng_for(seed, &[3]);
    let mut words: Vec<u32> = (0..vocab).collect();
    for i in (1..words.len()).rev() {
        words.swap(i, rng.random_range(0..=i));
    }
    let counts: Vec<(u32, u32)> = words
        .into_iter()
        .take(distinct)
        .map(|w| (w, rng.random_range(1..6)))
        .collect();
    Document::new("bench-doc", 3, Side::Lead, counts).unwrap()
}

/// Small two-sided corpus and a matching model configuration, sized so a
/// whole fit stays in benchmark territory.
pub fn small_corpus() -> (CorpusPair, ModelConfig) {
    let mut g = GenConfig::scenario1(3, 1, 1, 1, 11);
    g.horizon = 4;
    g.vocab_size = 100;
    g.docs_per_slice_mean = 10.0;
    g.docs_per_slice_min = 5;
    g.words_per_doc_mean = 20.0;
    g.words_per_doc_min = 10;
    let (corpus, _) = generate_scenario1(&g).unwrap();
    let mut cfg = ModelConfig::new(3, 1, 1, 1).with_seed(11);
    cfg.sweep_max = 3;
    cfg.stage_sweeps = 0;
    (corpus, cfg)
}

/// Unidirectionally coupled logistic maps (x chaotic and autonomous, y
/// forced by x), burned in and sampled for `n` steps.
pub fn coupled_series(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut x, mut y) = (0.4f64, 0.2f64);
    let step = |x: &mut f64, y: &mut f64| {
        let nx = *x * (3.8 - 3.8 * *x);
        let ny = *y * (3.5 - 3.5 * *y - 0.1 * *x);
        *x = nx;
        *y = ny;
    };
    for _ in 0..100 {
        step(&mut x, &mut y);
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        step(&mut x, &mut y);
        xs.push(x);
        ys.push(y);
    }
    (xs, ys)
}
