//! Shared vocabulary of the two-corpus model: corpus sides, topic kinds, and
//! the time wiring between document slices and topic-chain slots.

use serde::{Deserialize, Serialize};

/// Which of the two corpora a document belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lead,
    Lag,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lead => "lead",
            Side::Lag => "lag",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The three topic families. Shared topics are represented by both corpora
/// with an l-slice offset; specific topics by one corpus only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicKind {
    Shared,
    LeadSpecific,
    LagSpecific,
}

impl TopicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopicKind::Shared => "shared",
            TopicKind::LeadSpecific => "lead_specific",
            TopicKind::LagSpecific => "lag_specific",
        }
    }

    /// Whether documents on `side` represent topics of this kind.
    pub fn visible_from(self, side: Side) -> bool {
        match self {
            TopicKind::Shared => true,
            TopicKind::LeadSpecific => side == Side::Lead,
            TopicKind::LagSpecific => side == Side::Lag,
        }
    }
}

impl std::fmt::Display for TopicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Chain time read by a document at corpus slice `t`.
///
/// Lead documents read every chain at `t`. Lag documents read shared chains
/// at `t − l` and lag-specific chains at `t`. Every topic access goes through
/// this function so the lag wiring can be probed directly.
pub fn chain_time_for_doc(kind: TopicKind, side: Side, t: u32, lag: u32) -> i64 {
    debug_assert!(kind.visible_from(side));
    match (kind, side) {
        (TopicKind::Shared, Side::Lag) => i64::from(t) - i64::from(lag),
        _ => i64::from(t),
    }
}

/// Time extent of one topic chain.
///
/// Shared chains span extended chain times `1−l ..= T` (length `T+l`) so that
/// every lagged document at `t ∈ [1, T]` has a defined shared slice at `t−l`.
/// Specific chains span `1 ..= T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainSpan {
    start: i64,
    len: usize,
}

impl ChainSpan {
    pub fn shared(horizon: u32, lag: u32) -> Self {
        ChainSpan {
            start: 1 - i64::from(lag),
            len: (horizon + lag) as usize,
        }
    }

    pub fn specific(horizon: u32) -> Self {
        ChainSpan {
            start: 1,
            len: horizon as usize,
        }
    }

    pub fn for_kind(kind: TopicKind, horizon: u32, lag: u32) -> Self {
        match kind {
            TopicKind::Shared => ChainSpan::shared(horizon, lag),
            _ => ChainSpan::specific(horizon),
        }
    }

    /// First chain time covered (1−l for shared, 1 for specific).
    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last chain time covered.
    pub fn end(&self) -> i64 {
        self.start + self.len as i64 - 1
    }

    /// Number of chain slots.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Storage slot of chain time `s`, if covered.
    pub fn slot_of(&self, s: i64) -> Option<usize> {
        let off = s - self.start;
        if off >= 0 && (off as usize) < self.len {
            Some(off as usize)
        } else {
            None
        }
    }

    /// Chain time of storage slot `slot`.
    pub fn time_of(&self, slot: usize) -> i64 {
        self.start + slot as i64
    }

    /// Storage slot read by a document on `side` at corpus slice `t`.
    pub fn slot_for_doc(&self, kind: TopicKind, side: Side, t: u32, lag: u32) -> Option<usize> {
        self.slot_of(chain_time_for_doc(kind, side, t, lag))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_wiring_reads_shifted_shared_time() {
        // l=2: a lag-side document at slice 5 reads shared chain time 3.
        assert_eq!(chain_time_for_doc(TopicKind::Shared, Side::Lag, 5, 2), 3);
        assert_eq!(chain_time_for_doc(TopicKind::Shared, Side::Lead, 5, 2), 5);
        assert_eq!(chain_time_for_doc(TopicKind::LagSpecific, Side::Lag, 5, 2), 5);
        assert_eq!(chain_time_for_doc(TopicKind::LeadSpecific, Side::Lead, 5, 2), 5);
    }

    #[test]
    fn shared_span_extends_back_by_lag() {
        let span = ChainSpan::shared(10, 3);
        assert_eq!(span.start(), -2);
        assert_eq!(span.len(), 13);
        assert_eq!(span.slot_of(-2), Some(0));
        assert_eq!(span.slot_of(1), Some(3));
        assert_eq!(span.slot_of(10), Some(12));
        assert_eq!(span.slot_of(11), None);
        assert_eq!(span.slot_of(-3), None);
        assert_eq!(span.time_of(0), -2);
        assert_eq!(span.time_of(12), 10);
    }

    #[test]
    fn specific_span_covers_one_to_horizon() {
        let span = ChainSpan::specific(10);
        assert_eq!(span.start(), 1);
        assert_eq!(span.len(), 10);
        assert_eq!(span.slot_of(0), None);
        assert_eq!(span.slot_of(1), Some(0));
    }

    #[test]
    fn doc_slots_cover_every_slice() {
        // Every lead slice t in 1..=T and every lag slice t in 1..=T must
        // resolve to a defined shared slot.
        let (horizon, lag) = (7, 4);
        let span = ChainSpan::shared(horizon, lag);
        for t in 1..=horizon {
            assert!(span.slot_for_doc(TopicKind::Shared, Side::Lead, t, lag).is_some());
            assert!(span.slot_for_doc(TopicKind::Shared, Side::Lag, t, lag).is_some());
        }
    }

    #[test]
    fn zero_lag_shared_span_matches_specific() {
        assert_eq!(ChainSpan::shared(5, 0), ChainSpan::specific(5));
    }
}
