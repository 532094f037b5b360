//! Expected word-topic counts aggregated from document posteriors.

use crate::corpus::CorpusPair;
use crate::error::{Error, Result};
use crate::types::Side;

use super::document::DocumentPosterior;
use super::layout::TopicLayout;

/// Expected counts for one chain: `n[slot·V + word]` plus per-slot totals.
#[derive(Debug, Clone)]
pub struct ChainCounts {
    pub n: Vec<f64>,
    pub totals: Vec<f64>,
    vocab: usize,
}

impl ChainCounts {
    pub fn zeros(slots: usize, vocab: usize) -> Self {
        ChainCounts {
            n: vec![0.0; slots * vocab],
            totals: vec![0.0; slots],
            vocab,
        }
    }

    /// Wraps a dense slot-major count matrix, deriving the slot totals.
    pub fn from_dense(n: Vec<f64>, vocab: usize) -> Self {
        assert!(vocab > 0 && n.len() % vocab == 0);
        let slots = n.len() / vocab;
        let totals = (0..slots)
            .map(|s| n[s * vocab..(s + 1) * vocab].iter().sum())
            .collect();
        ChainCounts { n, totals, vocab }
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn slots(&self) -> usize {
        self.totals.len()
    }

    pub fn at(&self, slot: usize, word: u32) -> f64 {
        self.n[slot * self.vocab + word as usize]
    }

    pub fn add(&mut self, slot: usize, word: u32, amount: f64) {
        self.n[slot * self.vocab + word as usize] += amount;
        self.totals[slot] += amount;
    }

    pub fn mass(&self) -> f64 {
        self.totals.iter().sum()
    }

    pub fn check_shape(&self, slots: usize, vocab: usize) -> Result<()> {
        if self.slots() != slots || self.vocab != vocab {
            return Err(Error::Validation(format!(
                "count shape {}×{} does not match chain {}×{}",
                self.slots(),
                self.vocab,
                slots,
                vocab
            )));
        }
        Ok(())
    }
}

/// Expected counts for every chain, aligned with the canonical chain order.
#[derive(Debug, Clone)]
pub struct CountTensor {
    pub per_chain: Vec<ChainCounts>,
}

impl CountTensor {
    pub fn zeros(layout: &TopicLayout, vocab: usize) -> Self {
        let per_chain = (0..layout.num_chains())
            .map(|c| {
                let (kind, _) = layout.chain_meta(c);
                ChainCounts::zeros(layout.span(kind).len(), vocab)
            })
            .collect();
        CountTensor { per_chain }
    }

    pub fn mass(&self) -> f64 {
        self.per_chain.iter().map(|c| c.mass()).sum()
    }
}

/// Aggregates expected counts over all documents.
///
/// `posteriors` must align with `corpus.documents()` order. For a shared
/// topic, chain slot s collects lead documents at slice s and lag documents
/// at slice s+l; specific topics collect only their own side at slot t−1.
/// Accumulation runs in canonical document order, so results are
/// reproducible to the bit.
pub fn accumulate_counts(
    corpus: &CorpusPair,
    posteriors: &[DocumentPosterior],
    layout: &TopicLayout,
) -> CountTensor {
    assert_eq!(
        posteriors.len(),
        corpus.num_documents(),
        "one posterior per document"
    );
    let vocab = corpus.vocab_size() as usize;
    let mut tensor = CountTensor::zeros(layout, vocab);
    // (chain, slot) targets per (side, t) are the same for every document in
    // a slice; precompute per slice inside the side loop.
    let mut doc_iter_index = 0usize;
    for side in [Side::Lead, Side::Lag] {
        for t in 1..=layout.horizon {
            let targets = layout.doc_chain_slots(side, t);
            for doc in corpus.slice(side, t) {
                let post = &posteriors[doc_iter_index];
                doc_iter_index += 1;
                for (j, (w, c)) in doc.counts.iter().enumerate() {
                    let weight = c as f64;
                    let lambda = &post.lambda[j];
                    for (i, &(chain, slot)) in targets.iter().enumerate() {
                        tensor.per_chain[chain].add(slot, w, weight * lambda[i]);
                    }
                }
            }
        }
    }
    tensor
}
