//! Jointly dynamic topic modeling over lead-lag corpus pairs.
//!
//! Two time-sliced corpora are linked by shared topics whose word
//! distributions drift over time; the lag-side corpus reads the shared
//! topics with a fixed delay. This crate provides the generative model
//! (synthetic data), variational inference, held-out completion-perplexity
//! evaluation with lag selection, and cross-correlation / convergent
//! cross-mapping diagnostics on topic-word frequency series.

pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod jdtm;
pub mod math;
pub mod model_file;
pub mod reports;
pub mod seeding;
pub mod synthgen;
pub mod types;

pub use corpus::{CorpusPair, Document, SparseCounts, Vocabulary};
pub use diagnostics::{
    ccm, lagged_ccf, word_frequency_series, CcfResult, CcmOptions, FrequencySeries, SkillCurve,
};
pub use error::{Error, ErrorKind, Result};
pub use eval::{
    completion_perplexity, select_lag, stratified_split, CorpusSplit, LagSelection,
    PerplexityReport, SplitFractions,
};
pub use jdtm::{fit, FittedModel, ModelConfig};
pub use model_file::{load_model, save_model, MODEL_FILE_VERSION};
pub use synthgen::{GenConfig, GroundTruth, Scenario};
pub use types::{ChainSpan, Side, TopicKind};

/// Library version, re-exported for run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
