//! Mapping between document-visible topic positions and global chain
//! indices.
//!
//! Chains are stored in canonical order: shared topics 0..K, lead-specific
//! 0..J, lag-specific 0..H. A lead-side document sees topics
//! [shared 0..K, lead-specific 0..J]; a lag-side document sees
//! [shared 0..K, lag-specific 0..H], reading shared chains at time `t − l`.

use crate::types::{ChainSpan, Side, TopicKind};

use super::config::ModelConfig;

#[derive(Debug, Clone, Copy)]
pub struct TopicLayout {
    pub shared: u32,
    pub lead: u32,
    pub lag_topics: u32,
    pub lag: u32,
    pub horizon: u32,
}

impl TopicLayout {
    pub fn new(cfg: &ModelConfig, horizon: u32) -> Self {
        TopicLayout {
            shared: cfg.shared_topics,
            lead: cfg.lead_topics,
            lag_topics: cfg.lag_topics,
            lag: cfg.lag,
            horizon,
        }
    }

    pub fn num_chains(&self) -> usize {
        (self.shared + self.lead + self.lag_topics) as usize
    }

    /// Kind and within-kind index of a global chain position.
    pub fn chain_meta(&self, chain: usize) -> (TopicKind, u32) {
        let c = chain as u32;
        if c < self.shared {
            (TopicKind::Shared, c)
        } else if c < self.shared + self.lead {
            (TopicKind::LeadSpecific, c - self.shared)
        } else {
            assert!(c < self.shared + self.lead + self.lag_topics);
            (TopicKind::LagSpecific, c - self.shared - self.lead)
        }
    }

    pub fn span(&self, kind: TopicKind) -> ChainSpan {
        ChainSpan::for_kind(kind, self.horizon, self.lag)
    }

    /// Topics visible to one side.
    pub fn side_topics(&self, side: Side) -> usize {
        match side {
            Side::Lead => (self.shared + self.lead) as usize,
            Side::Lag => (self.shared + self.lag_topics) as usize,
        }
    }

    /// Global chain index of a side's i-th visible topic.
    pub fn chain_index(&self, side: Side, topic: usize) -> usize {
        let t = topic as u32;
        if t < self.shared {
            t as usize
        } else {
            match side {
                Side::Lead => topic,
                Side::Lag => (self.lead + t) as usize,
            }
        }
    }

    /// Chain slot a document at slice `t` reads for a chain of `kind`.
    /// Panics if the slice is outside 1..=T (corpus validation precludes it).
    pub fn doc_slot(&self, kind: TopicKind, side: Side, t: u32) -> usize {
        self.span(kind)
            .slot_for_doc(kind, side, t, self.lag)
            .unwrap_or_else(|| panic!("slice {t} out of range for {kind} chain"))
    }

    /// The (global chain index, slot) pairs a document at `(side, t)` reads,
    /// in visible-topic order.
    pub fn doc_chain_slots(&self, side: Side, t: u32) -> Vec<(usize, usize)> {
        (0..self.side_topics(side))
            .map(|i| {
                let ci = self.chain_index(side, i);
                let (kind, _) = self.chain_meta(ci);
                (ci, self.doc_slot(kind, side, t))
            })
            .collect()
    }
}
