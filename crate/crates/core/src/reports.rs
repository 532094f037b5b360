//! Report writers: top-word tables, ELBO traces, perplexity comparisons,
//! and diagnostic curves, as CSV (one table per file) or JSON.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;

use crate::corpus::Vocabulary;
use crate::diagnostics::{CcfResult, SkillCurve};
use crate::error::{Error, Result};
use crate::eval::PerplexityReport;
use crate::jdtm::FittedModel;
use crate::types::TopicKind;

/// One row of the top-word table.
#[derive(Debug, Clone, Serialize)]
pub struct TopWord {
    #[serde(rename = "type")]
    pub kind: TopicKind,
    pub topic: u32,
    /// Chain time of the slot; shared chains include the pre-period
    /// slots t ≤ 0 that only the lagged corpus reads.
    pub t: i64,
    /// 1-based rank within (topic, t).
    pub rank: u32,
    pub word: String,
    pub prob: f64,
}

/// The `top_n` most probable words of every (chain, time slot).
///
/// Probability ties break toward the smaller word index, so rankings are
/// total and reproducible.
pub fn top_words(model: &FittedModel, vocab: &Vocabulary, top_n: usize) -> Result<Vec<TopWord>> {
    if vocab.len() as u32 != model.vocab_size {
        return Err(Error::Validation(format!(
            "vocabulary has {} tokens but the model covers {}",
            vocab.len(),
            model.vocab_size
        )));
    }
    let mut rows = Vec::new();
    for chain in &model.chains {
        for slot in 0..chain.span.len() {
            let probs = chain.word_distribution(slot);
            let mut order: Vec<u32> = (0..probs.len() as u32).collect();
            order.sort_by(|&a, &b| {
                probs[b as usize]
                    .partial_cmp(&probs[a as usize])
                    .expect("finite probabilities")
                    .then(a.cmp(&b))
            });
            let t = chain.span.start() + slot as i64;
            for (rank, &w) in order.iter().take(top_n).enumerate() {
                rows.push(TopWord {
                    kind: chain.kind,
                    topic: chain.index,
                    t,
                    rank: rank as u32 + 1,
                    word: vocab
                        .token(w)
                        .expect("index within vocabulary")
                        .to_owned(),
                    prob: probs[w as usize],
                });
            }
        }
    }
    Ok(rows)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes (type, topic, t, rank, word, prob) rows.
pub fn write_top_words_csv(path: impl AsRef<Path>, rows: &[TopWord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["type", "topic", "t", "rank", "word", "prob"])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    for row in rows {
        w.write_record([
            row.kind.as_str().to_owned(),
            row.topic.to_string(),
            row.t.to_string(),
            row.rank.to_string(),
            row.word.clone(),
            format!("{:.17e}", row.prob),
        ])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// Writes the per-sweep ELBO trace as (sweep, elbo), sweeps 1-based.
pub fn write_elbo_csv(path: impl AsRef<Path>, trace: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["sweep", "elbo"])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    for (i, elbo) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{elbo:.17e}")])
            .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// One perplexity comparison row.
#[derive(Debug, Clone, Serialize)]
pub struct PplRow {
    pub method: String,
    /// Which pool was scored: "lead", "lag", or "combined".
    pub corpus: String,
    pub lag: u32,
    pub ppl: f64,
}

/// Expands a report into comparison rows; sides without scored documents
/// are skipped.
pub fn ppl_rows(method: &str, lag: u32, report: &PerplexityReport) -> Vec<PplRow> {
    let mut rows = Vec::with_capacity(3);
    if let Some(ppl) = report.lead {
        rows.push(PplRow {
            method: method.to_owned(),
            corpus: "lead".to_owned(),
            lag,
            ppl,
        });
    }
    if let Some(ppl) = report.lag {
        rows.push(PplRow {
            method: method.to_owned(),
            corpus: "lag".to_owned(),
            lag,
            ppl,
        });
    }
    rows.push(PplRow {
        method: method.to_owned(),
        corpus: "combined".to_owned(),
        lag,
        ppl: report.combined,
    });
    rows
}

/// Writes (method, corpus, lag, ppl) rows.
pub fn write_ppl_csv(path: impl AsRef<Path>, rows: &[PplRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["method", "corpus", "lag", "ppl"])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    for row in rows {
        w.write_record([
            row.method.clone(),
            row.corpus.clone(),
            row.lag.to_string(),
            format!("{:.6}", row.ppl),
        ])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// Writes the cross-correlogram. The lag column header states the sign
/// convention; undefined coefficients leave the cell empty.
pub fn write_ccf_csv(path: impl AsRef<Path>, ccf: &CcfResult) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record([
        "lag(positive_means_x_leads_y)",
        "ccf",
        "band_lo",
        "band_hi",
    ])
    .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    for point in &ccf.points {
        let coeff = point
            .coefficient
            .map_or_else(String::new, |c| format!("{c:.6}"));
        w.write_record([
            point.lag.to_string(),
            coeff,
            format!("{:.6}", -ccf.band),
            format!("{:.6}", ccf.band),
        ])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// Writes the CCM skill curve as (library_size, rho_mean, rho_sd); undefined
/// entries leave cells empty.
pub fn write_ccm_csv(path: impl AsRef<Path>, curve: &SkillCurve) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    w.write_record(["library_size", "rho_mean", "rho_sd"])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    for (i, &size) in curve.library_sizes.iter().enumerate() {
        let fmt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x:.6}"));
        w.write_record([
            size.to_string(),
            fmt(curve.rho_mean[i]),
            fmt(curve.rho_sd[i]),
        ])
        .map_err(|e| Error::Validation(format!("write {}: {e}", path.display())))?;
    }
    finish(w, path)
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| Error::Validation(format!("serialize {}: {e}", path.display())))?;
    use std::io::Write as _;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}
