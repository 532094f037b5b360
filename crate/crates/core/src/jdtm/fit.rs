//! Coordinate-ascent driver: initialization and the outer sweep loop.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::corpus::CorpusPair;
use crate::error::{Error, Result};
use crate::seeding::rng_for;
use crate::types::Side;

use super::chain::{update_chain_with, CgOptions, ChainRead, TopicChain};
use super::config::ModelConfig;
use super::counts::accumulate_counts;
use super::document::{update_document, DocOptions, DocumentPosterior};
use super::elbo::compute_elbo;
use super::layout::TopicLayout;
use super::model::{ChainPosterior, FittedModel};

/// Stream tag for initialization jitter.
const TAG_INIT: u64 = 101;
/// Jitter standard deviation around the log-frequency start.
const INIT_JITTER_SD: f64 = 0.1;

/// Mutable inference state during a fit.
pub struct FitState {
    pub chains: Vec<TopicChain>,
    /// Aligned with `corpus.documents()` order.
    pub posteriors: Vec<DocumentPosterior>,
}

/// Initializes chains at the jittered corpus log-frequency profile and
/// documents at uniform assignments.
///
/// Every chain slot starts at `log(freq_v + 1/V)` (whole-corpus empirical
/// frequency) plus seeded Gaussian jitter with standard deviation 0.1;
/// smoothed moments and ζ̂ are computed immediately.
pub fn init_state(corpus: &CorpusPair, cfg: &ModelConfig) -> Result<FitState> {
    cfg.validate()?;
    check_side_coverage(corpus, cfg)?;
    let vocab = corpus.vocab_size() as usize;
    if vocab == 0 {
        return Err(Error::Validation("vocabulary is empty".into()));
    }
    let layout = TopicLayout::new(cfg, corpus.horizon());

    let mut freq = vec![0.0_f64; vocab];
    let mut total = 0.0_f64;
    for doc in corpus.documents() {
        for (w, c) in doc.counts.iter() {
            freq[w as usize] += c as f64;
            total += c as f64;
        }
    }
    let base: Vec<f64> = freq
        .iter()
        .map(|&f| {
            let rel = if total > 0.0 { f / total } else { 0.0 };
            (rel + 1.0 / vocab as f64).ln()
        })
        .collect();

    let chains: Vec<TopicChain> = (0..layout.num_chains())
        .map(|c| {
            let (kind, index) = layout.chain_meta(c);
            let span = layout.span(kind);
            let mut rng = rng_for(cfg.init_seed, &[TAG_INIT, kind as u64, index as u64]);
            let alpha: Vec<f64> = (0..span.len())
                .flat_map(|_| base.iter().copied().collect::<Vec<_>>())
                .map(|b| b + INIT_JITTER_SD * rng.sample::<f64, _>(StandardNormal))
                .collect();
            TopicChain::new(
                kind,
                index,
                span,
                vocab,
                cfg.drift_var(kind),
                cfg.observation_var(kind),
                alpha,
            )
        })
        .collect::<Result<_>>()?;

    let posteriors: Vec<DocumentPosterior> = corpus
        .documents()
        .map(|doc| {
            DocumentPosterior::new_uniform(
                layout.side_topics(doc.side),
                &doc.counts,
                cfg.prior(doc.side),
            )
        })
        .collect();

    Ok(FitState { chains, posteriors })
}

/// Fits the model by bulk-synchronous coordinate ascent.
///
/// Each sweep runs every document update (parallel, chains read-only), then
/// count accumulation in canonical order, then every chain update (parallel,
/// disjoint state), then an ELBO evaluation. Stops when the relative ELBO
/// change drops below `elbo_rel_tol` or after `sweep_max` sweeps.
/// Every side that actually holds documents must see at least one topic
/// (shared + its own specific kind). Stated here rather than in
/// [`ModelConfig::validate`] so that single-corpus baseline layouts remain
/// usable: a lag-only corpus fit with only lag-specific chains is legal.
fn check_side_coverage(corpus: &CorpusPair, cfg: &ModelConfig) -> Result<()> {
    for side in [Side::Lead, Side::Lag] {
        let has_docs = corpus.side_documents(side).next().is_some();
        let visible = cfg.shared_topics
            + match side {
                Side::Lead => cfg.lead_topics,
                Side::Lag => cfg.lag_topics,
            };
        if has_docs && visible == 0 {
            return Err(Error::Validation(format!(
                "{side:?} documents present but no topic is visible to them"
            )));
        }
    }
    Ok(())
}

/// Result of running the coordinate-ascent sweep loop on one state.
struct SweepOutcome {
    state: FitState,
    elbo_trace: Vec<f64>,
    converged: bool,
    line_search_warnings: u32,
}

/// Runs up to `cfg.sweep_max` coordinate-ascent sweeps from `state`.
fn run_sweeps(corpus: &CorpusPair, cfg: &ModelConfig, state: FitState) -> Result<SweepOutcome> {
    let layout = TopicLayout::new(cfg, corpus.horizon());
    let FitState {
        mut chains,
        mut posteriors,
    } = state;
    let docs: Vec<&crate::corpus::Document> = corpus.documents().collect();
    let doc_opts = DocOptions {
        max_iter: cfg.doc_max_iter,
        tol: cfg.doc_tol,
    };
    let cg_opts = CgOptions {
        max_iter: cfg.cg_max_iter,
        tol: cfg.cg_tol,
    };

    let mut elbo_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut line_search_warnings = 0u32;

    for _sweep in 0..cfg.sweep_max {
        // Document phase: parallel map over documents in index order; each
        // task reads frozen chains and warm-starts from its last posterior.
        let chain_refs: &[TopicChain] = &chains;
        posteriors = docs
            .par_iter()
            .zip(posteriors.into_par_iter())
            .map(|(doc, warm)| {
                let targets = layout.doc_chain_slots(doc.side, doc.t);
                let views: Vec<(&dyn ChainRead, usize)> = targets
                    .iter()
                    .map(|&(chain, slot)| (&chain_refs[chain] as &dyn ChainRead, slot))
                    .collect();
                update_document(doc, &views, cfg.prior(doc.side), doc_opts, Some(warm))
            })
            .collect::<Result<Vec<_>>>()?;

        let counts = accumulate_counts(corpus, &posteriors, &layout);

        // Chain phase: disjoint mutable state per topic.
        let outcomes: Vec<_> = chains
            .par_iter_mut()
            .zip(counts.per_chain.par_iter())
            .map(|(chain, chain_counts)| update_chain_with(chain, chain_counts, cg_opts))
            .collect::<Result<Vec<_>>>()?;
        line_search_warnings += outcomes.iter().filter(|o| o.warning).count() as u32;

        let elbo = compute_elbo(&chains, &counts, corpus, &posteriors, cfg)?;
        if let Some(&prev) = elbo_trace.last() {
            let rel = (elbo - prev).abs() / prev.abs().max(1e-12);
            elbo_trace.push(elbo);
            if rel < cfg.elbo_rel_tol {
                converged = true;
                break;
            }
        } else {
            elbo_trace.push(elbo);
        }
    }

    Ok(SweepOutcome {
        state: FitState { chains, posteriors },
        elbo_trace,
        converged,
        line_search_warnings,
    })
}

/// Rebuilds the zero-lag warm-up chains on the spans of the lagged layout.
///
/// Specific chains keep their span (1..T) and copy over unchanged. A shared
/// chain grows from 1..T to 1−l..T; each target slot takes the
/// pseudo-observations of the source slot at the same time index, clamped
/// into 1..T, so the pre-period replicates the earliest fitted slot.
fn shift_stage_chains(
    stage: &[TopicChain],
    cfg: &ModelConfig,
    corpus: &CorpusPair,
) -> Result<Vec<TopicChain>> {
    let vocab = corpus.vocab_size() as usize;
    let layout = TopicLayout::new(cfg, corpus.horizon());
    stage
        .iter()
        .map(|chain| {
            let span = layout.span(chain.kind);
            let source_span = chain.span();
            let alpha_src = chain.alpha_hat();
            let mut alpha = Vec::with_capacity(span.len() * vocab);
            for slot in 0..span.len() {
                let t = span.start() + slot as i64;
                let clamped = t.clamp(source_span.start(), source_span.end());
                let src = (clamped - source_span.start()) as usize;
                alpha.extend_from_slice(&alpha_src[src * vocab..(src + 1) * vocab]);
            }
            TopicChain::new(
                chain.kind,
                chain.index,
                span,
                vocab,
                cfg.drift_var(chain.kind),
                cfg.observation_var(chain.kind),
                alpha,
            )
        })
        .collect()
}

pub fn fit(corpus: &CorpusPair, cfg: &ModelConfig) -> Result<FittedModel> {
    cfg.validate()?;
    check_side_coverage(corpus, cfg)?;
    if corpus.num_documents() == 0 {
        return Err(Error::Validation("no documents".into()));
    }

    let staged = cfg.stage_sweeps > 0 && cfg.lag > 0 && cfg.shared_topics > 0;
    let mut warm_up_warnings = 0u32;
    let start = if staged {
        let stage_cfg = ModelConfig {
            lag: 0,
            sweep_max: cfg.stage_sweeps,
            stage_sweeps: 0,
            ..cfg.clone()
        };
        let stage = run_sweeps(corpus, &stage_cfg, init_state(corpus, &stage_cfg)?)?;
        warm_up_warnings = stage.line_search_warnings;
        let chains = shift_stage_chains(&stage.state.chains, cfg, corpus)?;
        let layout = TopicLayout::new(cfg, corpus.horizon());
        let posteriors = corpus
            .documents()
            .map(|doc| {
                DocumentPosterior::new_uniform(
                    layout.side_topics(doc.side),
                    &doc.counts,
                    cfg.prior(doc.side),
                )
            })
            .collect();
        FitState { chains, posteriors }
    } else {
        init_state(corpus, cfg)?
    };

    let outcome = run_sweeps(corpus, cfg, start)?;
    Ok(FittedModel {
        config: cfg.clone(),
        horizon: corpus.horizon(),
        vocab_size: corpus.vocab_size(),
        chains: outcome.state.chains.iter().map(ChainPosterior::from_chain).collect(),
        elbo_trace: outcome.elbo_trace,
        converged: outcome.converged,
        line_search_warnings: outcome.line_search_warnings + warm_up_warnings,
    })
}

/// Fits one side of the corpus as an isolated dynamic topic model (the
/// separate-fit baseline): no shared topics, all topics side-specific.
pub fn fit_single_side(
    corpus: &CorpusPair,
    side: Side,
    topics: u32,
    template: &ModelConfig,
) -> Result<FittedModel> {
    let cfg = ModelConfig {
        shared_topics: 0,
        lead_topics: if side == Side::Lead { topics } else { 0 },
        lag_topics: if side == Side::Lag { topics } else { 0 },
        lag: 0,
        ..template.clone()
    };
    let restricted = corpus.restrict_to_side(side);
    if restricted.num_documents() == 0 {
        return Err(Error::Validation(format!("no {side} documents to fit")));
    }
    fit(&restricted, &cfg)
}
