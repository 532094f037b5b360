//! Held-out scoring by document completion, baseline fits, and lag selection.
//!
//! Each test document is split into alternating halves; the model folds in
//! the first half to estimate its topic proportions θ̂, then the second half
//! is scored under the induced per-slice word mixture Σₖ θ̂ₖ p(w|k). The
//! per-corpus perplexity exp(−Σ log p / Σ N₂) normalizes by the scored
//! (second-half) tokens. The module also provides the two reference
//! baselines — fitting each corpus separately, or pooling both corpora into
//! one — and grid-search lag selection on a validation split.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusPair, Document};
use crate::error::{Error, Result};
use crate::jdtm::{
    fit, fit_single_side, update_document, DocOptions, FittedModel, ModelConfig,
};
use crate::math::PROB_FLOOR;
use crate::seeding::rng_for;
use crate::types::Side;

/// Sub-seed tag for the train/validation/test shuffle streams.
const TAG_SPLIT: u64 = 21;

/// One document cut into alternating halves that share id, slice, and side.
#[derive(Debug, Clone)]
pub struct SplitDocument {
    pub first_half: Document,
    pub second_half: Document,
}

/// Splits a document deterministically into two halves.
///
/// Tokens are laid out in (word index, occurrence) order; even positions go
/// to the first half and odd positions to the second, so the first half holds
/// ⌈N/2⌉ tokens, the second ⌊N/2⌋, and the halves reunite to the original
/// counts.
pub fn split_document(doc: &Document) -> Result<SplitDocument> {
    let total: u64 = doc.counts.iter().map(|(_, c)| u64::from(c)).sum();
    if total < 2 {
        return Err(Error::TooShortToSplit(doc.id.clone()));
    }
    let mut first: Vec<(u32, u32)> = Vec::new();
    let mut second: Vec<(u32, u32)> = Vec::new();
    let mut pos: u64 = 0;
    for (w, c) in doc.counts.iter() {
        // Even offsets within [pos, pos+c) go to the first half.
        let into_first = if pos % 2 == 0 { c.div_ceil(2) } else { c / 2 };
        if into_first > 0 {
            first.push((w, into_first));
        }
        if c - into_first > 0 {
            second.push((w, c - into_first));
        }
        pos += u64::from(c);
    }
    Ok(SplitDocument {
        first_half: Document::new(doc.id.clone(), doc.t, doc.side, first)?,
        second_half: Document::new(doc.id.clone(), doc.t, doc.side, second)?,
    })
}

/// Estimates a document's topic proportions under a frozen model.
///
/// Runs the document coordinate ascent on `first_half` alone (chains fixed,
/// iterated to the model's document tolerance) and returns θ̂ = τ/Στ over the
/// topics visible to the document's side.
pub fn fold_in(model: &FittedModel, first_half: &Document) -> Result<Vec<f64>> {
    let chains = model.doc_chains(first_half.side, first_half.t);
    let opts = DocOptions {
        max_iter: model.config.doc_max_iter,
        tol: model.config.doc_tol,
    };
    let prior = model.config.prior(first_half.side);
    let post = update_document(first_half, &chains, prior, opts, None)?;
    Ok(post.theta_hat())
}

/// Completion score for one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocumentScore {
    pub id: String,
    pub side: Side,
    pub t: u32,
    /// log p(second half | first half, model), natural log.
    pub log_likelihood: f64,
    /// Second-half token count — the tokens actually scored.
    pub scored_tokens: u64,
    /// True when any token probability hit the 1e-300 floor.
    pub floored: bool,
}

/// Completion perplexity per corpus side plus the pooled figure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerplexityReport {
    /// Lead-corpus perplexity; `None` when no lead documents were scored.
    pub lead: Option<f64>,
    /// Lag-corpus perplexity; `None` when no lag documents were scored.
    pub lag: Option<f64>,
    /// Pooled perplexity exp(−(L₁+L₂)/(N₁+N₂)).
    pub combined: f64,
    pub lead_log_likelihood: f64,
    pub lag_log_likelihood: f64,
    pub lead_tokens: u64,
    pub lag_tokens: u64,
    pub scores: Vec<DocumentScore>,
}

impl PerplexityReport {
    /// Aggregates per-document scores; errors if nothing was scored.
    pub fn from_scores(scores: Vec<DocumentScore>) -> Result<Self> {
        let mut log_lik = [0.0_f64; 2];
        let mut tokens = [0_u64; 2];
        for score in &scores {
            let i = match score.side {
                Side::Lead => 0,
                Side::Lag => 1,
            };
            log_lik[i] += score.log_likelihood;
            tokens[i] += score.scored_tokens;
        }
        let total = tokens[0] + tokens[1];
        if total == 0 {
            return Err(Error::Validation("no tokens scored".into()));
        }
        let ppl = |l: f64, n: u64| (n > 0).then(|| (-l / n as f64).exp());
        Ok(PerplexityReport {
            lead: ppl(log_lik[0], tokens[0]),
            lag: ppl(log_lik[1], tokens[1]),
            combined: (-(log_lik[0] + log_lik[1]) / total as f64).exp(),
            lead_log_likelihood: log_lik[0],
            lag_log_likelihood: log_lik[1],
            lead_tokens: tokens[0],
            lag_tokens: tokens[1],
            scores,
        })
    }

    /// Pools the scores of two reports into one.
    pub fn merged(mut self, other: PerplexityReport) -> Result<PerplexityReport> {
        self.scores.extend(other.scores);
        PerplexityReport::from_scores(self.scores)
    }

    pub fn side_ppl(&self, side: Side) -> Option<f64> {
        match side {
            Side::Lead => self.lead,
            Side::Lag => self.lag,
        }
    }
}

/// log Σₖ θₖ·dist[k][w] summed over the second half's tokens, with each
/// token probability floored at [`PROB_FLOOR`]. Returns the log-likelihood
/// and whether the floor fired.
fn mixture_log_likelihood(theta: &[f64], dists: &[Vec<f64>], second: &Document) -> (f64, bool) {
    let mut log_lik = 0.0;
    let mut floored = false;
    for (w, c) in second.counts.iter() {
        let mut p = 0.0;
        for (weight, dist) in theta.iter().zip(dists) {
            p += weight * dist[w as usize];
        }
        if p < PROB_FLOOR {
            p = PROB_FLOOR;
            floored = true;
        }
        log_lik += f64::from(c) * p.ln();
    }
    (log_lik, floored)
}

/// Scores held-out documents by completion under a fitted model.
///
/// Per document: split, fold in the first half, then score every second-half
/// token under the mixture of the side-visible topics' word distributions at
/// the document's slice (lag-side documents read shared chains at t−l).
/// Documents score in parallel; aggregation runs in input order.
pub fn completion_perplexity(model: &FittedModel, docs: &[Document]) -> Result<PerplexityReport> {
    if docs.is_empty() {
        return Err(Error::Validation("no documents to score".into()));
    }
    let layout = model.layout();
    // One distribution row per visible topic, keyed by (side, slice);
    // precomputed so parallel scoring reads them immutably.
    let mut dists: HashMap<(Side, u32), Vec<Vec<f64>>> = HashMap::new();
    for doc in docs {
        if doc.t < 1 || doc.t > model.horizon {
            return Err(Error::Validation(format!(
                "document {} at slice {} outside model horizon {}",
                doc.id, doc.t, model.horizon
            )));
        }
        if let Some((w, _)) = doc.counts.iter().last() {
            if w >= model.vocab_size {
                return Err(Error::Validation(format!(
                    "document {} uses word index {} but the model covers {} words",
                    doc.id, w, model.vocab_size
                )));
            }
        }
        dists.entry((doc.side, doc.t)).or_insert_with(|| {
            layout
                .doc_chain_slots(doc.side, doc.t)
                .into_iter()
                .map(|(chain, slot)| model.chains[chain].word_distribution(slot))
                .collect()
        });
    }

    let scores = docs
        .par_iter()
        .map(|doc| -> Result<DocumentScore> {
            let halves = split_document(doc)?;
            let theta = fold_in(model, &halves.first_half)?;
            let rows = &dists[&(doc.side, doc.t)];
            let (log_lik, floored) = mixture_log_likelihood(&theta, rows, &halves.second_half);
            let scored_tokens = halves
                .second_half
                .counts
                .iter()
                .map(|(_, c)| u64::from(c))
                .sum();
            Ok(DocumentScore {
                id: doc.id.clone(),
                side: doc.side,
                t: doc.t,
                log_likelihood: log_lik,
                scored_tokens,
                floored,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PerplexityReport::from_scores(scores)
}

/// Train/validation shares of a document split; test takes the remainder.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitFractions {
    /// The 85/5/10 split used throughout the experiments.
    fn default() -> Self {
        SplitFractions {
            train: 0.85,
            validation: 0.05,
        }
    }
}

/// A disjoint train/validation/test partition sharing one vocabulary.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: CorpusPair,
    pub validation: CorpusPair,
    pub test: CorpusPair,
}

/// Seeded partition stratified by (side, slice).
///
/// Each stratum shuffles under its own sub-seed and cuts into ⌊train·n⌋ /
/// ⌊validation·n⌋ / remainder, so the test share absorbs rounding and every
/// document lands in exactly one part. The same `(corpus, fractions, seed)`
/// always yields the same partition.
pub fn stratified_split(
    corpus: &CorpusPair,
    fractions: SplitFractions,
    seed: u64,
) -> Result<CorpusSplit> {
    if !(fractions.train > 0.0
        && fractions.validation >= 0.0
        && fractions.train + fractions.validation < 1.0)
    {
        return Err(Error::Validation(
            "split fractions need 0 < train, 0 <= validation, train + validation < 1".into(),
        ));
    }
    let mut parts: [Vec<Document>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for side in [Side::Lead, Side::Lag] {
        let side_tag = match side {
            Side::Lead => 0,
            Side::Lag => 1,
        };
        for t in 1..=corpus.horizon() {
            let mut docs: Vec<&Document> = corpus.slice(side, t).iter().collect();
            docs.shuffle(&mut rng_for(seed, &[TAG_SPLIT, side_tag, u64::from(t)]));
            let n = docs.len();
            let n_train = (fractions.train * n as f64).floor() as usize;
            let n_val = (fractions.validation * n as f64).floor() as usize;
            for (i, doc) in docs.into_iter().enumerate() {
                let bucket = if i < n_train {
                    0
                } else if i < n_train + n_val {
                    1
                } else {
                    2
                };
                parts[bucket].push(doc.clone());
            }
        }
    }
    let [train, validation, test] = parts;
    let build = |docs: Vec<Document>| {
        CorpusPair::with_horizon(docs, corpus.vocab().clone(), corpus.horizon())
    };
    Ok(CorpusSplit {
        train: build(train)?,
        validation: build(validation)?,
        test: build(test)?,
    })
}

/// Separate-fit baseline: each corpus fit alone as a plain dynamic topic
/// model, with as many topics as that side sees under `cfg` (K+J for lead,
/// K+H for lag) and no cross-corpus coupling.
pub fn fit_separate(corpus: &CorpusPair, cfg: &ModelConfig) -> Result<(FittedModel, FittedModel)> {
    let lead = fit_single_side(corpus, Side::Lead, cfg.shared_topics + cfg.lead_topics, cfg)?;
    let lag = fit_single_side(corpus, Side::Lag, cfg.shared_topics + cfg.lag_topics, cfg)?;
    Ok((lead, lag))
}

/// Combined-fit baseline: every document relabeled to the lead side and fit
/// as one dynamic topic model with K+J+H topics and no lag.
pub fn fit_combined(corpus: &CorpusPair, cfg: &ModelConfig) -> Result<FittedModel> {
    let merged = corpus.relabel_all_lead();
    fit_single_side(&merged, Side::Lead, cfg.total_topics(), cfg)
}

/// Scores test documents under the separate-fit baseline pair: lead docs
/// against the lead model, lag docs against the lag model, pooled into one
/// report.
pub fn completion_perplexity_separate(
    lead_model: &FittedModel,
    lag_model: &FittedModel,
    docs: &[Document],
) -> Result<PerplexityReport> {
    let lead_docs: Vec<Document> = docs.iter().filter(|d| d.side == Side::Lead).cloned().collect();
    let lag_docs: Vec<Document> = docs.iter().filter(|d| d.side == Side::Lag).cloned().collect();
    match (lead_docs.is_empty(), lag_docs.is_empty()) {
        (false, false) => {
            let lead = completion_perplexity(lead_model, &lead_docs)?;
            let lag = completion_perplexity(lag_model, &lag_docs)?;
            lead.merged(lag)
        }
        (false, true) => completion_perplexity(lead_model, &lead_docs),
        (true, false) => completion_perplexity(lag_model, &lag_docs),
        (true, true) => Err(Error::Validation("no documents to score".into())),
    }
}

/// Scores test documents under the combined baseline. Documents are
/// relabeled to the lead side for scoring (the pooled model only has
/// lead-visible topics) but keep their original side in the report, so
/// per-corpus figures remain comparable.
pub fn completion_perplexity_combined(
    model: &FittedModel,
    docs: &[Document],
) -> Result<PerplexityReport> {
    let relabeled: Vec<Document> = docs
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.side = Side::Lead;
            d
        })
        .collect();
    let report = completion_perplexity(model, &relabeled)?;
    let scores = report
        .scores
        .into_iter()
        .zip(docs)
        .map(|(mut score, original)| {
            score.side = original.side;
            score
        })
        .collect();
    PerplexityReport::from_scores(scores)
}

/// Outcome of grid-search lag selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LagSelection {
    pub best_lag: u32,
    /// (lag, lagged-corpus validation perplexity), ascending by lag.
    pub ppl_per_lag: Vec<(u32, f64)>,
}

/// Picks the lag minimizing lagged-corpus completion perplexity.
///
/// Splits once (train/validation, seeded), fits one model per grid lag on
/// the train part, and scores the validation lag-side documents. Ties go to
/// the smallest lag.
pub fn select_lag(
    corpus: &CorpusPair,
    template: &ModelConfig,
    grid: &[u32],
    fractions: SplitFractions,
    split_seed: u64,
) -> Result<LagSelection> {
    if grid.is_empty() {
        return Err(Error::Validation("lag grid is empty".into()));
    }
    let mut lags = grid.to_vec();
    lags.sort_unstable();
    lags.dedup();
    for &l in &lags {
        if l >= corpus.horizon() {
            return Err(Error::Validation(format!(
                "lag {l} is infeasible for horizon {}",
                corpus.horizon()
            )));
        }
    }
    let split = stratified_split(corpus, fractions, split_seed)?;
    let val_lag_docs: Vec<Document> = split
        .validation
        .side_documents(Side::Lag)
        .cloned()
        .collect();
    if val_lag_docs.is_empty() {
        return Err(Error::Validation(
            "validation split holds no lag-side documents".into(),
        ));
    }
    let mut ppl_per_lag = Vec::with_capacity(lags.len());
    for &l in &lags {
        let cfg = ModelConfig {
            lag: l,
            ..template.clone()
        };
        let model = fit(&split.train, &cfg)?;
        let report = completion_perplexity(&model, &val_lag_docs)?;
        let ppl = report.lag.expect("lag documents were scored");
        ppl_per_lag.push((l, ppl));
    }
    Ok(LagSelection {
        best_lag: argmin_lag(&ppl_per_lag),
        ppl_per_lag,
    })
}

/// Smallest lag attaining the minimum perplexity (input ascending by lag).
fn argmin_lag(pairs: &[(u32, f64)]) -> u32 {
    let mut best = pairs[0];
    for &(l, p) in &pairs[1..] {
        if p < best.1 {
            best = (l, p);
        }
    }
    best.0
}
