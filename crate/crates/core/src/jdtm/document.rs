//! Per-document coordinate ascent: token-assignment distributions λ and the
//! variational Dirichlet parameter τ.
//!
//! Duplicate tokens of the same word receive identical assignments, so λ is
//! stored per distinct word and weighted by its count wherever token sums
//! appear.

use crate::corpus::{Document, SparseCounts};
use crate::error::{Error, Result};
use crate::math::{digamma, log_softmax, DIGAMMA_MIN_ARG};

use super::chain::ChainRead;

/// Variational posterior of one document over its visible topics.
#[derive(Debug, Clone)]
pub struct DocumentPosterior {
    /// Dirichlet parameter, one entry per visible topic.
    pub tau: Vec<f64>,
    /// `lambda[j][i]`: assignment distribution of the j-th distinct word
    /// over topics i.
    pub lambda: Vec<Vec<f64>>,
}

impl DocumentPosterior {
    /// Uniform assignments; τ = prior + N/M per topic.
    pub fn new_uniform(num_topics: usize, counts: &SparseCounts, prior: f64) -> Self {
        assert!(num_topics >= 1);
        let m = num_topics as f64;
        let lambda = vec![vec![1.0 / m; num_topics]; counts.len()];
        let tau = vec![prior + counts.total() as f64 / m; num_topics];
        DocumentPosterior { tau, lambda }
    }

    /// Point estimate of topic proportions: τ normalized.
    pub fn theta_hat(&self) -> Vec<f64> {
        let total: f64 = self.tau.iter().sum();
        self.tau.iter().map(|&t| t / total).collect()
    }
}

/// Stopping rule for one document's coordinate ascent.
#[derive(Debug, Clone, Copy)]
pub struct DocOptions {
    pub max_iter: u32,
    /// Sup-norm tolerance on λ changes per iteration.
    pub tol: f64,
}

/// Coordinate ascent on one document with chains frozen.
///
/// `chains` lists the document's visible topics in canonical order, each as
/// (chain, slot) where `slot` is the chain-span slot this document reads
/// (lag-side documents read shared chains at `t − l`). Per iteration: every
/// distinct word's λ is set proportional to
/// `exp(m̃[slot][w] − log ζ̂[slot] + Ψ(τ_i))`, then τ = prior + Σ count·λ.
/// Stops when the largest λ change drops below `tol` or after `max_iter`
/// iterations. `warm` continues from a previous posterior.
pub fn update_document(
    doc: &Document,
    chains: &[(&dyn ChainRead, usize)],
    prior: f64,
    opts: DocOptions,
    warm: Option<DocumentPosterior>,
) -> Result<DocumentPosterior> {
    let m = chains.len();
    assert!(m >= 1, "document must see at least one topic");
    // Chain contribution to each score; constant across iterations.
    let base: Vec<Vec<f64>> = doc
        .counts
        .iter()
        .map(|(w, _)| {
            chains
                .iter()
                .map(|&(chain, slot)| chain.m_tilde_at(slot, w) - chain.log_zeta_at(slot))
                .collect()
        })
        .collect();
    for (j, row) in base.iter().enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(non_finite(doc, j, "chain score"));
        }
    }

    let mut post = warm.unwrap_or_else(|| DocumentPosterior::new_uniform(m, &doc.counts, prior));
    debug_assert_eq!(post.lambda.len(), doc.counts.len());
    debug_assert_eq!(post.tau.len(), m);

    let mut scores = vec![0.0; m];
    for _ in 0..opts.max_iter {
        let psi: Vec<f64> = post
            .tau
            .iter()
            .map(|&t| digamma(t.max(DIGAMMA_MIN_ARG)))
            .collect();
        let mut max_delta = 0.0_f64;
        for (j, row) in base.iter().enumerate() {
            for i in 0..m {
                scores[i] = row[i] + psi[i];
            }
            let log_lambda = log_softmax(&scores);
            for i in 0..m {
                let new = log_lambda[i].exp();
                if !new.is_finite() {
                    return Err(non_finite(doc, j, "assignment"));
                }
                max_delta = max_delta.max((new - post.lambda[j][i]).abs());
                post.lambda[j][i] = new;
            }
        }
        for i in 0..m {
            post.tau[i] = prior
                + doc
                    .counts
                    .iter()
                    .enumerate()
                    .map(|(j, (_, c))| c as f64 * post.lambda[j][i])
                    .sum::<f64>();
        }
        if max_delta < opts.tol {
            break;
        }
    }
    Ok(post)
}

fn non_finite(doc: &Document, token: usize, context: &str) -> Error {
    Error::NonFinite {
        doc_id: doc.id.clone(),
        token,
        context: context.to_string(),
    }
}
