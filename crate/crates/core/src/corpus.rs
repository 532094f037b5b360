//! Bag-of-words corpora over two time-sliced document streams.
//!
//! A corpus file is JSONL, one record per document:
//! `{"id": str, "t": int>=1, "side": "lead"|"lag", "counts": {"<word index>": count}}`.
//! The vocabulary is a UTF-8 text file, one token per line; the line number
//! (0-based) is the word index. Documents carry sparse counts; dense
//! vocabulary vectors are materialized only inside the inference engine.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::types::Side;

/// Ordered token list; index of a token is stable across a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Validation("vocabulary is empty".into()));
        }
        let mut seen = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if let Some(prev) = seen.insert(tok.as_str(), i) {
                return Err(Error::Validation(format!(
                    "duplicate vocabulary token {tok:?} at lines {prev} and {i}"
                )));
            }
        }
        Ok(Vocabulary { tokens })
    }

    /// Synthetic vocabulary `w0000, w0001, ...` of the given size.
    pub fn synthetic(size: u32) -> Self {
        let width = (size.max(1) as f64).log10().floor() as usize + 1;
        Vocabulary {
            tokens: (0..size).map(|i| format!("w{i:0width$}")).collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut tokens = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            tokens.push(line);
        }
        // A trailing newline produces one empty final entry; drop it.
        if tokens.last().is_some_and(|t| t.is_empty()) {
            tokens.pop();
        }
        Vocabulary::new(tokens)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for tok in &self.tokens {
            writeln!(out, "{tok}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(|s| s.as_str())
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.tokens.iter().position(|t| t == token).map(|i| i as u32)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Sparse word counts, kept sorted by word index. Counts are positive.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SparseCounts(Vec<(u32, u32)>);

impl SparseCounts {
    pub fn new(mut pairs: Vec<(u32, u32)>) -> Result<Self> {
        pairs.sort_unstable_by_key(|&(w, _)| w);
        for win in pairs.windows(2) {
            if win[0].0 == win[1].0 {
                return Err(Error::Validation(format!(
                    "duplicate word index {} in counts",
                    win[0].0
                )));
            }
        }
        if pairs.iter().any(|&(_, c)| c == 0) {
            return Err(Error::Validation("zero count in counts map".into()));
        }
        Ok(SparseCounts(pairs))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn max_word_index(&self) -> Option<u32> {
        self.0.last().map(|&(w, _)| w)
    }
}

impl Serialize for SparseCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        // Keys emitted in numeric order for byte-stable output.
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for &(w, c) in &self.0 {
            map.serialize_entry(&w.to_string(), &c)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for SparseCounts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct CountsVisitor;

        impl<'de> Visitor<'de> for CountsVisitor {
            type Value = SparseCounts;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from word index to positive count")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut pairs = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((key, value)) = access.next_entry::<String, u64>()? {
                    let word: u32 = key.parse().map_err(|_| {
                        serde::de::Error::custom(format!("counts key {key:?} is not a word index"))
                    })?;
                    if value == 0 {
                        return Err(serde::de::Error::custom(format!(
                            "count for word {word} must be positive"
                        )));
                    }
                    let count = u32::try_from(value).map_err(|_| {
                        serde::de::Error::custom(format!("count for word {word} too large"))
                    })?;
                    pairs.push((word, count));
                }
                SparseCounts::new(pairs).map_err(|e| serde::de::Error::custom(e.to_string()))
            }
        }

        deserializer.deserialize_map(CountsVisitor)
    }
}

/// One bag-of-words document in a time slice of one corpus side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    /// 1-based time slice.
    pub t: u32,
    pub side: Side,
    pub counts: SparseCounts,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        t: u32,
        side: Side,
        counts: Vec<(u32, u32)>,
    ) -> Result<Self> {
        let doc = Document {
            id: id.into(),
            t,
            side,
            counts: SparseCounts::new(counts)?,
        };
        doc.validate(u32::MAX)?;
        Ok(doc)
    }

    /// Total token count N.
    pub fn total_tokens(&self) -> u64 {
        self.counts.total()
    }

    fn validate(&self, vocab_size: u32) -> Result<()> {
        if self.t < 1 {
            return Err(Error::Validation(format!(
                "document {:?}: slice index t={} must be >= 1",
                self.id, self.t
            )));
        }
        if self.counts.is_empty() {
            return Err(Error::Validation(format!(
                "document {:?} has no tokens",
                self.id
            )));
        }
        if let Some(max) = self.counts.max_word_index() {
            if max >= vocab_size {
                return Err(Error::Validation(format!(
                    "document {:?}: word index {} out of range (vocabulary size {}, max index {})",
                    self.id,
                    max,
                    vocab_size,
                    vocab_size - 1
                )));
            }
        }
        Ok(())
    }
}

/// Two time-sliced corpora (lead, lag) over one shared vocabulary.
///
/// Immutable once constructed; safe to share read-only across workers.
#[derive(Debug, Clone)]
pub struct CorpusPair {
    horizon: u32,
    lead: Vec<Vec<Document>>,
    lag: Vec<Vec<Document>>,
    vocab: Vocabulary,
}

impl CorpusPair {
    /// Builds a pair from loose documents; the horizon is the maximum slice
    /// index seen, with empty slices filled in.
    pub fn from_documents(docs: Vec<Document>, vocab: Vocabulary) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Validation("no documents".into()));
        }
        let horizon = docs.iter().map(|d| d.t).max().unwrap();
        Self::with_horizon(docs, vocab, horizon)
    }

    /// Builds a pair with an explicit horizon (used by data splits so that a
    /// subset keeps the parent's time extent).
    pub fn with_horizon(docs: Vec<Document>, vocab: Vocabulary, horizon: u32) -> Result<Self> {
        let vocab_size = vocab.len() as u32;
        for doc in &docs {
            doc.validate(vocab_size)?;
        }
        if horizon < 1 {
            return Err(Error::Validation("horizon must be >= 1".into()));
        }
        let mut lead: Vec<Vec<Document>> = (0..horizon).map(|_| Vec::new()).collect();
        let mut lag: Vec<Vec<Document>> = (0..horizon).map(|_| Vec::new()).collect();
        for doc in docs {
            if doc.t > horizon {
                return Err(Error::Validation(format!(
                    "document {:?}: slice {} exceeds horizon {}",
                    doc.id, doc.t, horizon
                )));
            }
            let slot = (doc.t - 1) as usize;
            match doc.side {
                Side::Lead => lead[slot].push(doc),
                Side::Lag => lag[slot].push(doc),
            }
        }
        Ok(CorpusPair {
            horizon,
            lead,
            lag,
            vocab,
        })
    }

    /// Loads a JSONL corpus against a vocabulary file.
    pub fn load(corpus_path: impl AsRef<Path>, vocab_path: impl AsRef<Path>) -> Result<Self> {
        let vocab = Vocabulary::load(vocab_path)?;
        let path = corpus_path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut docs = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            docs.push(doc);
        }
        Self::from_documents(docs, vocab)
    }

    /// Writes the corpus back out as JSONL, one document per line, in
    /// canonical order.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for doc in self.documents() {
            let line = serde_json::to_string(doc)
                .map_err(|e| Error::Validation(format!("serialize document {:?}: {e}", doc.id)))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab.len() as u32
    }

    /// Documents in slice `t` (1-based) on one side.
    pub fn slice(&self, side: Side, t: u32) -> &[Document] {
        assert!(t >= 1 && t <= self.horizon, "slice {t} out of range");
        match side {
            Side::Lead => &self.lead[(t - 1) as usize],
            Side::Lag => &self.lag[(t - 1) as usize],
        }
    }

    /// All documents on one side, slice order.
    pub fn side_documents(&self, side: Side) -> impl Iterator<Item = &Document> {
        let slices = match side {
            Side::Lead => &self.lead,
            Side::Lag => &self.lag,
        };
        slices.iter().flatten()
    }

    /// Canonical document order: lead slices 1..=T, then lag slices 1..=T.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.side_documents(Side::Lead)
            .chain(self.side_documents(Side::Lag))
    }

    pub fn num_documents(&self) -> usize {
        self.documents().count()
    }

    pub fn total_tokens(&self) -> u64 {
        self.documents().map(|d| d.total_tokens()).sum()
    }

    /// Token totals per slice for one side (length T).
    pub fn slice_token_totals(&self, side: Side) -> Vec<u64> {
        (1..=self.horizon)
            .map(|t| self.slice(side, t).iter().map(|d| d.total_tokens()).sum())
            .collect()
    }

    /// A copy with every document relabeled to the lead side (the combined
    /// single-corpus view used by the pooled baseline).
    pub fn relabel_all_lead(&self) -> CorpusPair {
        let docs: Vec<Document> = self
            .documents()
            .map(|d| {
                let mut d = d.clone();
                d.side = Side::Lead;
                d
            })
            .collect();
        CorpusPair::with_horizon(docs, self.vocab.clone(), self.horizon)
            .expect("relabeled documents stay valid")
    }

    /// A copy containing only one side's documents (horizon preserved).
    pub fn restrict_to_side(&self, side: Side) -> CorpusPair {
        let docs: Vec<Document> = self.side_documents(side).cloned().collect();
        CorpusPair {
            horizon: self.horizon,
            lead: match side {
                Side::Lead => self.lead.clone(),
                Side::Lag => (0..self.horizon).map(|_| Vec::new()).collect(),
            },
            lag: match side {
                Side::Lead => (0..self.horizon).map(|_| Vec::new()).collect(),
                Side::Lag => self.lag.clone(),
            },
            vocab: self.vocab.clone(),
        }
        .validated_nonempty(docs.len())
    }

    fn validated_nonempty(self, n: usize) -> CorpusPair {
        debug_assert!(n > 0 || self.num_documents() == 0);
        self
    }
}
