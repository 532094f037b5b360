//! Frozen model state: chain posteriors plus fit metadata.

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::types::{ChainSpan, Side, TopicKind};

use super::chain::{ChainRead, TopicChain};
use super::config::ModelConfig;
use super::layout::TopicLayout;

/// Posterior moments of one topic chain, detached from the optimizer state.
#[derive(Debug, Clone)]
pub struct ChainPosterior {
    pub kind: TopicKind,
    pub index: u32,
    pub span: ChainSpan,
    /// `m_tilde[slot][word]`.
    pub m_tilde: Vec<Vec<f64>>,
    /// `v_tilde[slot][word]`.
    pub v_tilde: Vec<Vec<f64>>,
    /// log ζ̂ per slot; derived from the moments.
    pub log_zeta: Vec<f64>,
}

impl ChainPosterior {
    pub fn from_chain(chain: &TopicChain) -> Self {
        let span = chain.span();
        let vocab = chain.vocab();
        let m_tilde: Vec<Vec<f64>> = (0..span.len())
            .map(|s| chain.m_tilde()[s * vocab..(s + 1) * vocab].to_vec())
            .collect();
        let v_tilde: Vec<Vec<f64>> = (0..span.len())
            .map(|s| vec![chain.v_smooth_at(s); vocab])
            .collect();
        let log_zeta = chain.log_zeta().to_vec();
        ChainPosterior {
            kind: chain.kind,
            index: chain.index,
            span,
            m_tilde,
            v_tilde,
            log_zeta,
        }
    }

    /// Builds from raw moments, deriving log ζ̂ = log Σ_v exp(m̃ + Ṽ/2).
    pub fn from_moments(
        kind: TopicKind,
        index: u32,
        span: ChainSpan,
        m_tilde: Vec<Vec<f64>>,
        v_tilde: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if m_tilde.len() != span.len() || v_tilde.len() != span.len() {
            return Err(Error::ModelFile(format!(
                "{kind} chain {index}: {} slots, expected {}",
                m_tilde.len(),
                span.len()
            )));
        }
        let vocab = m_tilde.first().map_or(0, |row| row.len());
        if vocab == 0 {
            return Err(Error::ModelFile(format!("{kind} chain {index}: empty slots")));
        }
        let mut log_zeta = Vec::with_capacity(span.len());
        for (s, (m_row, v_row)) in m_tilde.iter().zip(&v_tilde).enumerate() {
            if m_row.len() != vocab || v_row.len() != vocab {
                return Err(Error::ModelFile(format!(
                    "{kind} chain {index}: ragged slot {s}"
                )));
            }
            let shifted: Vec<f64> = m_row
                .iter()
                .zip(v_row)
                .map(|(&m, &v)| m + 0.5 * v)
                .collect();
            log_zeta.push(log_sum_exp(&shifted));
        }
        Ok(ChainPosterior {
            kind,
            index,
            span,
            m_tilde,
            v_tilde,
            log_zeta,
        })
    }

    pub fn vocab(&self) -> usize {
        self.m_tilde[0].len()
    }

    /// Word distribution at a slot: softmax of the smoothed means.
    pub fn word_distribution(&self, slot: usize) -> Vec<f64> {
        crate::math::softmax(&self.m_tilde[slot])
    }
}

impl ChainRead for ChainPosterior {
    fn kind(&self) -> TopicKind {
        self.kind
    }

    fn span(&self) -> ChainSpan {
        self.span
    }

    fn m_tilde_at(&self, slot: usize, word: u32) -> f64 {
        self.m_tilde[slot][word as usize]
    }

    fn log_zeta_at(&self, slot: usize) -> f64 {
        self.log_zeta[slot]
    }
}

/// A fitted model: configuration, chain posteriors, and the ELBO trace.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub config: ModelConfig,
    pub horizon: u32,
    pub vocab_size: u32,
    /// Canonical order: shared 0..K, lead-specific 0..J, lag-specific 0..H.
    pub chains: Vec<ChainPosterior>,
    pub elbo_trace: Vec<f64>,
    pub converged: bool,
    /// Chain updates that exhausted the line-search failure budget.
    pub line_search_warnings: u32,
}

impl FittedModel {
    pub fn layout(&self) -> TopicLayout {
        TopicLayout::new(&self.config, self.horizon)
    }

    /// The (chain, slot) pairs a document at `(side, t)` reads, in
    /// visible-topic order — the wiring for fold-in and scoring.
    pub fn doc_chains(&self, side: Side, t: u32) -> Vec<(&dyn ChainRead, usize)> {
        self.layout()
            .doc_chain_slots(side, t)
            .into_iter()
            .map(|(chain, slot)| (&self.chains[chain] as &dyn ChainRead, slot))
            .collect()
    }

    /// Consistency checks tying chains to config and corpus shape.
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let layout = self.layout();
        if self.chains.len() != layout.num_chains() {
            return Err(Error::ModelFile(format!(
                "{} chains, config implies {}",
                self.chains.len(),
                layout.num_chains()
            )));
        }
        for (c, chain) in self.chains.iter().enumerate() {
            let (kind, index) = layout.chain_meta(c);
            if chain.kind != kind || chain.index != index {
                return Err(Error::ModelFile(format!(
                    "chain {c} is {} {} but canonical order expects {} {}",
                    chain.kind, chain.index, kind, index
                )));
            }
            let span = layout.span(kind);
            if chain.span != span {
                return Err(Error::ModelFile(format!(
                    "{kind} chain {index}: span {:?} != expected {:?}",
                    chain.span, span
                )));
            }
            if chain.vocab() != self.vocab_size as usize {
                return Err(Error::ModelFile(format!(
                    "{kind} chain {index}: vocab {} != {}",
                    chain.vocab(),
                    self.vocab_size
                )));
            }
        }
        Ok(())
    }
}
