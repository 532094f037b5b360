//! Synthetic corpus-pair generation under the joint lead-lag topic model.
//!
//! Two scenarios: `Plain` draws topic chains directly as natural parameters
//! over the vocabulary; `Embedded` draws topic trajectories in an embedding
//! space and maps them to word distributions through a fixed unit-norm word
//! embedding matrix. Shared-topic chains extend back to time `1−l` so every
//! lagged document has a defined shared slice at `t−l`.
//!
//! Generation is deterministic for a fixed seed: every random stream is
//! derived from `(seed, purpose, index)` sub-seeds, so slice order and
//! scheduling cannot change the output.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

use crate::corpus::{CorpusPair, Document, Vocabulary};
use crate::error::{Error, Result};
use crate::math::{js_divergence, softmax};
use crate::seeding::rng_for;
use crate::types::{chain_time_for_doc, ChainSpan, Side, TopicKind};

// Stream tags keep sub-seeds for unrelated purposes disjoint.
const TAG_CHAIN: u64 = 1;
const TAG_PROPORTION_MEANS: u64 = 2;
const TAG_DOCS: u64 = 3;
const TAG_EMBEDDINGS: u64 = 4;
const TAG_SCREENING: u64 = 5;

const MAX_SCREENING_ATTEMPTS: u32 = 1000;

/// Which generative process produces topic-word distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Natural parameters drawn per word (random-walk over the vocabulary).
    Plain,
    /// Topic trajectories in embedding space; words via softmax(ρᵀ α).
    Embedded,
}

/// Configuration for synthetic generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    /// Number of time slices T.
    pub horizon: u32,
    /// Vocabulary size V.
    pub vocab_size: u32,
    /// Shared topic count K.
    pub shared_topics: u32,
    /// Lead-specific topic count J.
    pub lead_topics: u32,
    /// Lag-specific topic count H.
    pub lag_topics: u32,
    /// Lead-lag offset l.
    pub lag: u32,
    /// Documents per slice per side ~ Po(mean) + min.
    pub docs_per_slice_mean: f64,
    pub docs_per_slice_min: u32,
    /// Words per document ~ Po(mean) + min.
    pub words_per_doc_mean: f64,
    pub words_per_doc_min: u32,
    /// Per-side overrides of the word-count law, for corpora whose document
    /// lengths differ (e.g. papers vs. abstracts); `None` falls back to the
    /// shared law above.
    #[serde(default)]
    pub lead_words_per_doc_mean: Option<f64>,
    #[serde(default)]
    pub lead_words_per_doc_min: Option<u32>,
    #[serde(default)]
    pub lag_words_per_doc_mean: Option<f64>,
    #[serde(default)]
    pub lag_words_per_doc_min: Option<u32>,
    /// Random-walk step variance for shared chains.
    pub shared_drift_var: f64,
    /// Step variance for lead-specific chains.
    pub lead_drift_var: f64,
    /// Step variance for lag-specific chains.
    pub lag_drift_var: f64,
    /// Step variance of the per-side proportion-mean walks.
    pub proportion_mean_drift_var: f64,
    pub scenario: Scenario,
    /// Embedding dimension L (embedded scenario).
    pub embed_dim: u32,
    /// Minimum Jensen-Shannon divergence between lead-specific and
    /// lag-specific initial word distributions (embedded scenario).
    pub js_threshold: f64,
    pub seed: u64,
}

impl GenConfig {
    /// Plain-scenario defaults at the reference scale: T=10, V=1000,
    /// docs Po(100)+50, words Po(50)+50, unit drift variances.
    pub fn scenario1(shared: u32, lead: u32, lag_topics: u32, lag: u32, seed: u64) -> Self {
        GenConfig {
            horizon: 10,
            vocab_size: 1000,
            shared_topics: shared,
            lead_topics: lead,
            lag_topics,
            lag,
            docs_per_slice_mean: 100.0,
            docs_per_slice_min: 50,
            words_per_doc_mean: 50.0,
            words_per_doc_min: 50,
            lead_words_per_doc_mean: None,
            lead_words_per_doc_min: None,
            lag_words_per_doc_mean: None,
            lag_words_per_doc_min: None,
            shared_drift_var: 1.0,
            lead_drift_var: 1.0,
            lag_drift_var: 1.0,
            proportion_mean_drift_var: 1.0,
            scenario: Scenario::Plain,
            embed_dim: 0,
            js_threshold: 0.2,
            seed,
        }
    }

    /// Embedded-scenario defaults at desk scale (L=50); the reference scale
    /// in the source setup is T=31, V=17794, docs Po(400)+100, words
    /// Po(300)+50, L=300.
    pub fn scenario2(shared: u32, lead: u32, lag_topics: u32, lag: u32, seed: u64) -> Self {
        GenConfig {
            scenario: Scenario::Embedded,
            embed_dim: 50,
            ..GenConfig::scenario1(shared, lead, lag_topics, lag, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Validation("horizon T must be >= 1".into()));
        }
        if self.vocab_size < 1 {
            return Err(Error::Validation("vocabulary size V must be >= 1".into()));
        }
        if self.shared_topics + self.lead_topics < 1 {
            return Err(Error::Validation("need K+J >= 1 lead-visible topics".into()));
        }
        if self.shared_topics + self.lag_topics < 1 {
            return Err(Error::Validation("need K+H >= 1 lag-visible topics".into()));
        }
        for (name, v) in [
            ("shared_drift_var", self.shared_drift_var),
            ("lead_drift_var", self.lead_drift_var),
            ("lag_drift_var", self.lag_drift_var),
            ("proportion_mean_drift_var", self.proportion_mean_drift_var),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if self.docs_per_slice_mean < 0.0 || self.words_per_doc_mean < 0.0 {
            return Err(Error::Validation("Poisson means must be >= 0".into()));
        }
        if self.docs_per_slice_mean == 0.0 && self.docs_per_slice_min == 0 {
            return Err(Error::Validation("document count law always yields 0".into()));
        }
        for side in [Side::Lead, Side::Lag] {
            let (mean, min) = self.words_per_doc(side);
            if mean < 0.0 || !mean.is_finite() {
                return Err(Error::Validation(format!(
                    "{side:?} word-count mean must be >= 0, got {mean}"
                )));
            }
            if mean == 0.0 && min == 0 {
                return Err(Error::Validation(format!(
                    "{side:?} word count law always yields 0"
                )));
            }
        }
        if self.scenario == Scenario::Embedded && self.embed_dim < 2 {
            return Err(Error::Validation(
                "embedded scenario needs embed_dim L >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Effective word-count law (Poisson mean, minimum) for one side.
    pub fn words_per_doc(&self, side: Side) -> (f64, u32) {
        match side {
            Side::Lead => (
                self.lead_words_per_doc_mean.unwrap_or(self.words_per_doc_mean),
                self.lead_words_per_doc_min.unwrap_or(self.words_per_doc_min),
            ),
            Side::Lag => (
                self.lag_words_per_doc_mean.unwrap_or(self.words_per_doc_mean),
                self.lag_words_per_doc_min.unwrap_or(self.words_per_doc_min),
            ),
        }
    }

    fn drift_var(&self, kind: TopicKind) -> f64 {
        match kind {
            TopicKind::Shared => self.shared_drift_var,
            TopicKind::LeadSpecific => self.lead_drift_var,
            TopicKind::LagSpecific => self.lag_drift_var,
        }
    }

    fn topic_count(&self, kind: TopicKind) -> u32 {
        match kind {
            TopicKind::Shared => self.shared_topics,
            TopicKind::LeadSpecific => self.lead_topics,
            TopicKind::LagSpecific => self.lag_topics,
        }
    }

    /// Topics visible from one side, in canonical order (shared first).
    fn visible_topics(&self, side: Side) -> u32 {
        match side {
            Side::Lead => self.shared_topics + self.lead_topics,
            Side::Lag => self.shared_topics + self.lag_topics,
        }
    }
}

/// One true topic trajectory: `values[slot]` holds natural parameters, with
/// `slot 0` at chain time `span.start()`. Columns are vocabulary entries in
/// the plain scenario and embedding dimensions in the embedded scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthChain {
    pub kind: TopicKind,
    pub index: u32,
    pub span: ChainSpan,
    pub values: Vec<Vec<f64>>,
}

/// True mixing proportions of one generated document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocProportions {
    pub id: String,
    pub side: Side,
    pub t: u32,
    /// Length K+J (lead) or K+H (lag); shared topics first.
    pub theta: Vec<f64>,
}

/// Everything the generator drew besides the corpus itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: Scenario,
    pub horizon: u32,
    pub vocab_size: u32,
    pub lag: u32,
    /// All chains: shared, then lead-specific, then lag-specific.
    pub chains: Vec<TruthChain>,
    /// Unit-column word embeddings, `embeddings[dim][word]` (embedded only).
    pub embeddings: Option<Vec<Vec<f64>>>,
    /// Per-slice proportion-walk means, `[t-1][topic]`, lead side (K+J wide).
    pub lead_proportion_means: Vec<Vec<f64>>,
    /// Same for the lag side (K+H wide).
    pub lag_proportion_means: Vec<Vec<f64>>,
    pub doc_proportions: Vec<DocProportions>,
}

impl GroundTruth {
    /// Word distribution of a chain at a slot of its own span.
    pub fn word_distribution(&self, chain: &TruthChain, slot: usize) -> Vec<f64> {
        match &self.embeddings {
            None => softmax(&chain.values[slot]),
            Some(rho) => embedded_word_distribution(rho, &chain.values[slot]),
        }
    }

    /// Chains of one kind, in index order.
    pub fn chains_of(&self, kind: TopicKind) -> impl Iterator<Item = &TruthChain> {
        self.chains.iter().filter(move |c| c.kind == kind)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::Validation(format!("serialize ground truth: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::Validation(format!("parse ground truth {}: {e}", path.display())))
    }
}

/// softmax(ρᵀ α): word distribution of an embedded topic state.
/// `rho[dim][word]` has unit-norm columns; `alpha` has length `rho.len()`.
pub fn embedded_word_distribution(rho: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    assert_eq!(rho.len(), alpha.len(), "embedding dim mismatch");
    let v = rho[0].len();
    let mut logits = vec![0.0; v];
    for (row, &a) in rho.iter().zip(alpha) {
        for (logit, &r) in logits.iter_mut().zip(row) {
            *logit += a * r;
        }
    }
    softmax(&logits)
}

/// Generates a corpus pair under the plain (vocabulary-space) process.
pub fn generate_scenario1(cfg: &GenConfig) -> Result<(CorpusPair, GroundTruth)> {
    cfg.validate()?;
    if cfg.scenario != Scenario::Plain {
        return Err(Error::Validation(
            "generate_scenario1 requires scenario = plain".into(),
        ));
    }
    let mut truth = sample_truth(cfg)?;
    let corpus = sample_corpus(cfg, &mut truth)?;
    Ok((corpus, truth))
}

/// Generates a corpus pair under the embedded process with Jensen-Shannon
/// screening between lead-specific and lag-specific topics.
pub fn generate_scenario2(cfg: &GenConfig) -> Result<(CorpusPair, GroundTruth)> {
    cfg.validate()?;
    if cfg.scenario != Scenario::Embedded {
        return Err(Error::Validation(
            "generate_scenario2 requires scenario = embedded".into(),
        ));
    }
    let mut truth = sample_truth(cfg)?;
    let corpus = sample_corpus(cfg, &mut truth)?;
    Ok((corpus, truth))
}

/// Draws chains, proportion means, and (embedded) word embeddings. No
/// documents yet; `doc_proportions` starts empty.
pub fn sample_truth(cfg: &GenConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let state_dim = match cfg.scenario {
        Scenario::Plain => cfg.vocab_size as usize,
        Scenario::Embedded => cfg.embed_dim as usize,
    };

    let embeddings = match cfg.scenario {
        Scenario::Plain => None,
        Scenario::Embedded => Some(sample_embeddings(cfg)),
    };

    let mut truth = GroundTruth {
        scenario: cfg.scenario,
        horizon: cfg.horizon,
        vocab_size: cfg.vocab_size,
        lag: cfg.lag,
        chains: Vec::new(),
        embeddings,
        lead_proportion_means: sample_proportion_means(cfg, Side::Lead),
        lag_proportion_means: sample_proportion_means(cfg, Side::Lag),
        doc_proportions: Vec::new(),
    };

    // Specific-topic initial states; the embedded scenario screens them for
    // separation before the walks evolve.
    let (lead_inits, lag_inits) = sample_specific_initials(cfg, &truth, state_dim)?;

    for kind in [TopicKind::Shared, TopicKind::LeadSpecific, TopicKind::LagSpecific] {
        let span = ChainSpan::for_kind(kind, cfg.horizon, cfg.lag);
        for index in 0..cfg.topic_count(kind) {
            let mut rng = rng_for(cfg.seed, &[TAG_CHAIN, kind as u64, index as u64]);
            let init = match kind {
                TopicKind::Shared => standard_normal_vec(&mut rng, state_dim),
                TopicKind::LeadSpecific => lead_inits[index as usize].clone(),
                TopicKind::LagSpecific => lag_inits[index as usize].clone(),
            };
            let values = random_walk(&mut rng, init, span.len(), cfg.drift_var(kind));
            truth.chains.push(TruthChain {
                kind,
                index,
                span,
                values,
            });
        }
    }
    Ok(truth)
}

/// Samples documents against an existing truth, recording their true
/// proportions into `truth.doc_proportions` (replacing any previous ones).
///
/// Exposed separately so tests can pair hand-constructed chains with the
/// standard document-sampling machinery.
pub fn sample_corpus(cfg: &GenConfig, truth: &mut GroundTruth) -> Result<CorpusPair> {
    cfg.validate()?;
    let vocab = Vocabulary::synthetic(cfg.vocab_size);
    let mut docs = Vec::new();
    let mut proportions = Vec::new();

    for side in [Side::Lead, Side::Lag] {
        // Visible chains in canonical topic order: shared then side-specific.
        let specific_kind = match side {
            Side::Lead => TopicKind::LeadSpecific,
            Side::Lag => TopicKind::LagSpecific,
        };
        let visible: Vec<&TruthChain> = truth
            .chains_of(TopicKind::Shared)
            .chain(truth.chains_of(specific_kind))
            .collect();
        debug_assert_eq!(visible.len(), cfg.visible_topics(side) as usize);
        let means = match side {
            Side::Lead => &truth.lead_proportion_means,
            Side::Lag => &truth.lag_proportion_means,
        };

        for t in 1..=cfg.horizon {
            // Word CDFs of every visible topic at this slice's chain times.
            let cdfs: Vec<Vec<f64>> = visible
                .iter()
                .map(|chain| {
                    let s = chain_time_for_doc(chain.kind, side, t, cfg.lag);
                    let slot = chain.span.slot_of(s).unwrap_or_else(|| {
                        panic!("chain time {s} outside span for {:?}", chain.kind)
                    });
                    cdf_of(&truth.word_distribution(chain, slot))
                })
                .collect();

            let mut rng = rng_for(cfg.seed, &[TAG_DOCS, side as u64, t as u64]);
            let n_docs = sample_count(&mut rng, cfg.docs_per_slice_mean, cfg.docs_per_slice_min);
            for i in 0..n_docs {
                let id = format!("{side}-t{t}-{i:04}");
                let theta = sample_proportions(&mut rng, &means[(t - 1) as usize]);
                let theta_cdf = cdf_of(&theta);
                let (w_mean, w_min) = cfg.words_per_doc(side);
                let n_words = sample_count(&mut rng, w_mean, w_min);
                let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
                for _ in 0..n_words {
                    let z = sample_categorical(&theta_cdf, &mut rng);
                    let w = sample_categorical(&cdfs[z], &mut rng) as u32;
                    *counts.entry(w).or_insert(0) += 1;
                }
                docs.push(Document::new(
                    id.clone(),
                    t,
                    side,
                    counts.into_iter().collect(),
                )?);
                proportions.push(DocProportions {
                    id,
                    side,
                    t,
                    theta,
                });
            }
        }
    }
    truth.doc_proportions = proportions;
    CorpusPair::with_horizon(docs, vocab, cfg.horizon)
}

fn sample_embeddings(cfg: &GenConfig) -> Vec<Vec<f64>> {
    let mut rng = rng_for(cfg.seed, &[TAG_EMBEDDINGS]);
    let l = cfg.embed_dim as usize;
    let v = cfg.vocab_size as usize;
    let mut rho = vec![vec![0.0; v]; l];
    // Draw column-by-column so each word's vector is contiguous in the
    // stream, then normalize the column to unit length.
    for w in 0..v {
        let mut norm_sq = 0.0;
        for row in rho.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            row[w] = z;
            norm_sq += z * z;
        }
        let norm = norm_sq.sqrt().max(f64::MIN_POSITIVE);
        for row in rho.iter_mut() {
            row[w] /= norm;
        }
    }
    rho
}

fn sample_proportion_means(cfg: &GenConfig, side: Side) -> Vec<Vec<f64>> {
    let mut rng = rng_for(cfg.seed, &[TAG_PROPORTION_MEANS, side as u64]);
    let dim = cfg.visible_topics(side) as usize;
    let init = standard_normal_vec(&mut rng, dim);
    random_walk(&mut rng, init, cfg.horizon as usize, cfg.proportion_mean_drift_var)
}

/// Initial states of specific topics; the embedded scenario redraws the whole
/// set until every (lead-specific, lag-specific) pair of t=1 word
/// distributions is at least `js_threshold` apart.
fn sample_specific_initials(
    cfg: &GenConfig,
    truth: &GroundTruth,
    state_dim: usize,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rng = rng_for(cfg.seed, &[TAG_SCREENING]);
    let screen = cfg.scenario == Scenario::Embedded && cfg.lead_topics > 0 && cfg.lag_topics > 0;
    for _ in 0..MAX_SCREENING_ATTEMPTS {
        let lead: Vec<Vec<f64>> = (0..cfg.lead_topics)
            .map(|_| standard_normal_vec(&mut rng, state_dim))
            .collect();
        let lag: Vec<Vec<f64>> = (0..cfg.lag_topics)
            .map(|_| standard_normal_vec(&mut rng, state_dim))
            .collect();
        if !screen {
            return Ok((lead, lag));
        }
        let rho = truth.embeddings.as_ref().expect("embedded scenario");
        let lead_dists: Vec<Vec<f64>> = lead
            .iter()
            .map(|a| embedded_word_distribution(rho, a))
            .collect();
        let lag_dists: Vec<Vec<f64>> = lag
            .iter()
            .map(|a| embedded_word_distribution(rho, a))
            .collect();
        let separated = lead_dists.iter().all(|p| {
            lag_dists
                .iter()
                .all(|q| js_divergence(p, q) >= cfg.js_threshold)
        });
        if separated {
            return Ok((lead, lag));
        }
    }
    Err(Error::TopicSeparation)
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Gaussian random walk: `steps` states starting at `init`, each subsequent
/// state adding N(0, drift_var) per coordinate.
fn random_walk(
    rng: &mut ChaCha8Rng,
    init: Vec<f64>,
    steps: usize,
    drift_var: f64,
) -> Vec<Vec<f64>> {
    let sd = drift_var.sqrt();
    let mut out = Vec::with_capacity(steps);
    out.push(init);
    for _ in 1..steps {
        let prev = out.last().unwrap();
        let next: Vec<f64> = prev
            .iter()
            .map(|&x| x + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        out.push(next);
    }
    out
}

/// Proportion draw: exp of N(mean_i, 1) per coordinate, normalized — i.e.
/// softmax of a unit-variance Gaussian around the slice mean.
fn sample_proportions(rng: &mut ChaCha8Rng, mean: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = mean
        .iter()
        .map(|&m| m + rng.sample::<f64, _>(StandardNormal))
        .collect();
    softmax(&logits)
}

fn sample_count(rng: &mut ChaCha8Rng, mean: f64, min: u32) -> u32 {
    let extra = if mean > 0.0 {
        Poisson::new(mean).expect("validated Poisson mean").sample(rng) as u32
    } else {
        0
    };
    min + extra
}

fn cdf_of(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|&p| {
            acc += p;
            acc
        })
        .collect()
}

/// Inverse-CDF draw; `cdf` is nondecreasing with last element ~1.
fn sample_categorical(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}
