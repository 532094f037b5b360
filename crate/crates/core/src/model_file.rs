//! Fitted-model persistence.
//!
//! A fitted model is stored as one JSON document: `{version, config, horizon,
//! vocab_size, converged, line_search_warnings, chains, elbo_trace}`, where
//! each chain record carries `{type, k, m_tilde[S][V], V_tilde[S][V]}`. Chain
//! spans and the auxiliary normalizers ζ̂ are not stored: spans follow from
//! the config plus horizon, and log ζ̂ is recomputed from the moments on load
//! so the invariant ζ̂ₛ = Σ_v exp(m̃ₛᵥ + Ṽₛᵥ/2) holds by construction.
//! Numbers survive the round trip at full decimal precision, so
//! `load_model(save_model(m))` reproduces every ranking and trace value.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jdtm::{ChainPosterior, FittedModel, ModelConfig, TopicLayout};
use crate::types::TopicKind;

/// Version tag checked on load; bump whenever the schema changes shape.
pub const MODEL_FILE_VERSION: &str = "leadlag-model/1";

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: String,
    config: ModelConfig,
    horizon: u32,
    vocab_size: u32,
    converged: bool,
    line_search_warnings: u32,
    chains: Vec<ChainRecord>,
    elbo_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ChainRecord {
    #[serde(rename = "type")]
    kind: TopicKind,
    k: u32,
    m_tilde: Vec<Vec<f64>>,
    #[serde(rename = "V_tilde")]
    v_tilde: Vec<Vec<f64>>,
}

/// Writes `model` as a single compact JSON document.
pub fn save_model(model: &FittedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    model.validate()?;
    let record = ModelFile {
        version: MODEL_FILE_VERSION.to_owned(),
        config: model.config.clone(),
        horizon: model.horizon,
        vocab_size: model.vocab_size,
        converged: model.converged,
        line_search_warnings: model.line_search_warnings,
        chains: model
            .chains
            .iter()
            .map(|chain| ChainRecord {
                kind: chain.kind,
                k: chain.index,
                m_tilde: chain.m_tilde.clone(),
                v_tilde: chain.v_tilde.clone(),
            })
            .collect(),
        elbo_trace: model.elbo_trace.clone(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &record)
        .map_err(|e| Error::ModelFile(format!("write {}: {e}", path.display())))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Reads a model written by [`save_model`], rebuilding spans and ζ̂.
///
/// Rejects unknown version tags, truncated or malformed JSON, and chain
/// shapes inconsistent with the stored config.
pub fn load_model(path: impl AsRef<Path>) -> Result<FittedModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let record: ModelFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::ModelFile(format!("parse {}: {e}", path.display())))?;
    if record.version != MODEL_FILE_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported model file version {:?} (expected {MODEL_FILE_VERSION:?})",
            record.version
        )));
    }
    record.config.validate()?;
    let layout = TopicLayout::new(&record.config, record.horizon);
    let chains = record
        .chains
        .into_iter()
        .map(|rec| {
            ChainPosterior::from_moments(
                rec.kind,
                rec.k,
                layout.span(rec.kind),
                rec.m_tilde,
                rec.v_tilde,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let model = FittedModel {
        config: record.config,
        horizon: record.horizon,
        vocab_size: record.vocab_size,
        chains,
        elbo_trace: record.elbo_trace,
        converged: record.converged,
        line_search_warnings: record.line_search_warnings,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusPair, Document, Vocabulary};
    use crate::jdtm::fit;
    use crate::types::Side;

    fn small_model() -> FittedModel {
        let vocab = Vocabulary::synthetic(6);
        let mut docs = Vec::new();
        for t in 1..=2u32 {
            for d in 0..3u32 {
                docs.push(
                    Document::new(
                        format!("lead-{t}-{d}"),
                        t,
                        Side::Lead,
                        vec![(d % 6, 2), ((d + t) % 6, 3)],
                    )
                    .unwrap(),
                );
                docs.push(
                    Document::new(
                        format!("lag-{t}-{d}"),
                        t,
                        Side::Lag,
                        vec![((d + 2) % 6, 4)],
                    )
                    .unwrap(),
                );
            }
        }
        let corpus = CorpusPair::from_documents(docs, vocab).unwrap();
        let mut cfg = ModelConfig::new(1, 1, 1, 1);
        cfg.sweep_max = 3;
        fit(&corpus, &cfg).unwrap()
    }

    #[test]
    fn round_trip_reproduces_rankings_and_trace() {
        let model = small_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        assert_eq!(loaded.horizon, model.horizon);
        assert_eq!(loaded.vocab_size, model.vocab_size);
        assert_eq!(loaded.converged, model.converged);
        assert_eq!(loaded.elbo_trace.len(), model.elbo_trace.len());
        assert_eq!(
            loaded.elbo_trace.last().copied(),
            model.elbo_trace.last().copied()
        );
        assert_eq!(loaded.chains.len(), model.chains.len());
        for (a, b) in loaded.chains.iter().zip(model.chains.iter()) {
            assert_eq!(a.kind, b.kind);
            assert_eq!(a.index, b.index);
            assert_eq!(a.span, b.span);
            // Bit-exact moments imply identical word rankings per slot.
            assert_eq!(a.m_tilde, b.m_tilde);
            assert_eq!(a.v_tilde, b.v_tilde);
            for (za, zb) in a.log_zeta.iter().zip(b.log_zeta.iter()) {
                assert!((za - zb).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wrong_version_tag_is_rejected() {
        let model = small_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let bad = text.replace(MODEL_FILE_VERSION, "leadlag-model/999");
        std::fs::write(&path, bad).unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "got: {err}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let model = small_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn non_json_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, b"MAGIC-0001\x00\x01").unwrap();
        assert!(load_model(&path).is_err());
    }
}
