//! The full evidence lower bound: chain contributions plus document-level
//! Dirichlet/multinomial expectations and entropies.
//!
//! Word-likelihood terms live entirely in the chain contributions (they are
//! the data bound over expected counts), so the document terms here cover
//! only the topic-proportion prior, the assignment expectations, and the
//! entropies of q(θ) and q(z).

use crate::corpus::CorpusPair;
use crate::error::{Error, Result};
use crate::math::{digamma, ln_gamma, DIGAMMA_MIN_ARG};

use super::chain::{chain_constant_terms, chain_elbo, TopicChain};
use super::config::ModelConfig;
use super::counts::CountTensor;
use super::document::DocumentPosterior;

/// ELBO of the current variational state. Errors, naming the offending
/// term, if any contribution is non-finite.
pub fn compute_elbo(
    chains: &[TopicChain],
    counts: &CountTensor,
    corpus: &CorpusPair,
    posteriors: &[DocumentPosterior],
    cfg: &ModelConfig,
) -> Result<f64> {
    assert_eq!(chains.len(), counts.per_chain.len());
    assert_eq!(posteriors.len(), corpus.num_documents());

    let mut total = 0.0;
    for (chain, chain_counts) in chains.iter().zip(&counts.per_chain) {
        total += chain_elbo(chain, chain_counts)?;
        let constant = chain_constant_terms(chain);
        if !constant.is_finite() {
            return Err(Error::NonFiniteElbo {
                term: format!("{} chain {} entropy", chain.kind, chain.index),
            });
        }
        total += constant;
    }

    for (doc, post) in corpus.documents().zip(posteriors) {
        let prior = cfg.prior(doc.side);
        let contribution = document_terms(post, &doc.counts, prior);
        if !contribution.is_finite() {
            return Err(Error::NonFiniteElbo {
                term: format!("document {}", doc.id),
            });
        }
        total += contribution;
    }

    if !total.is_finite() {
        return Err(Error::NonFiniteElbo { term: "total".into() });
    }
    Ok(total)
}

/// E[log p(θ)] + E[log p(z|θ)] + H(q(θ)) + H(q(z)) for one document.
fn document_terms(
    post: &DocumentPosterior,
    counts: &crate::corpus::SparseCounts,
    prior: f64,
) -> f64 {
    let m = post.tau.len();
    let tau0: f64 = post.tau.iter().sum();
    let psi0 = digamma(tau0.max(DIGAMMA_MIN_ARG));
    let psi: Vec<f64> = post
        .tau
        .iter()
        .map(|&t| digamma(t.max(DIGAMMA_MIN_ARG)) - psi0)
        .collect();

    // E[log p(θ | prior)] for the symmetric Dirichlet prior.
    let mut value = ln_gamma(m as f64 * prior) - m as f64 * ln_gamma(prior)
        + (prior - 1.0) * psi.iter().sum::<f64>();

    // E[log p(z|θ)] and H(q(z)), weighted by token counts.
    for (j, (_, c)) in counts.iter().enumerate() {
        let weight = c as f64;
        for (i, &p) in psi.iter().enumerate() {
            let lam = post.lambda[j][i];
            value += weight * lam * p;
            if lam > 0.0 {
                value -= weight * lam * lam.ln();
            }
        }
    }

    // H(q(θ)) for the variational Dirichlet.
    value += post.tau.iter().map(|&t| ln_gamma(t)).sum::<f64>() - ln_gamma(tau0);
    for (i, &t) in post.tau.iter().enumerate() {
        value -= (t - 1.0) * psi[i];
    }
    value
}
