//! Inference configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TopicKind;

/// Configuration for variational inference.
///
/// Defaults follow the reference experimental setup: drift variances 0.005,
/// Dirichlet prior scalars 0.1 for both sides. The observation variance ν̂²
/// of the smoothing family defaults to 10× the drift variance of each chain
/// type so pseudo-observations stay looser than the drift.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Shared topic count K.
    pub shared_topics: u32,
    /// Lead-specific topic count J.
    pub lead_topics: u32,
    /// Lag-specific topic count H.
    pub lag_topics: u32,
    /// Lead-lag offset l.
    pub lag: u32,
    /// Random-walk variance of shared chains (σ²_k).
    pub shared_drift_var: f64,
    /// Random-walk variance of lead-specific chains (σ²_j).
    pub lead_drift_var: f64,
    /// Random-walk variance of lag-specific chains (σ²_h).
    pub lag_drift_var: f64,
    /// Variational observation variance ν̂²; `None` → 10× drift variance of
    /// the chain's type.
    pub obs_var: Option<f64>,
    /// Dirichlet prior scalar η for lead-side documents.
    pub lead_prior: f64,
    /// Dirichlet prior scalar κ for lag-side documents.
    pub lag_prior: f64,
    /// Proportion-mean drift variances (δ²_f, δ²_l) and per-document
    /// proportion variances (ϖ²_f, ϖ²_l). Carried for generation parity;
    /// the document updates use the fixed Dirichlet priors above instead,
    /// so these never enter inference.
    pub lead_mean_drift_var: f64,
    pub lag_mean_drift_var: f64,
    pub lead_proportion_var: f64,
    pub lag_proportion_var: f64,
    /// Conjugate-gradient iteration cap per chain update.
    pub cg_max_iter: u32,
    /// Relative objective-change tolerance for conjugate gradient.
    pub cg_tol: f64,
    /// Coordinate-ascent iteration cap per document update.
    pub doc_max_iter: u32,
    /// Sup-norm tolerance on per-token assignment changes.
    pub doc_tol: f64,
    /// Maximum outer sweeps.
    pub sweep_max: u32,
    /// Relative ELBO-change stopping tolerance across sweeps.
    pub elbo_rel_tol: f64,
    /// Warm-up sweeps at lag 0 before fitting at the requested lag.
    ///
    /// With several shared topics and a nonzero lag, random initialization
    /// often settles a shared chain on different themes for the two corpora
    /// (the sides only meet through an offset, so nothing ties their topic
    /// identities together early on). A short zero-lag pre-fit makes both
    /// sides read the same slot, forcing one cross-side identity per chain;
    /// the main fit then starts from those chains, shifted to the requested
    /// lag. `0` disables staging; it is also skipped when `lag == 0` or
    /// `shared_topics == 0`, where the pre-fit would equal the main fit.
    #[serde(default)]
    pub stage_sweeps: u32,
    /// Seed for initialization jitter.
    pub init_seed: u64,
}

impl ModelConfig {
    pub fn new(shared: u32, lead: u32, lag_topics: u32, lag: u32) -> Self {
        ModelConfig {
            shared_topics: shared,
            lead_topics: lead,
            lag_topics,
            lag,
            shared_drift_var: 0.005,
            lead_drift_var: 0.005,
            lag_drift_var: 0.005,
            obs_var: None,
            lead_prior: 0.1,
            lag_prior: 0.1,
            lead_mean_drift_var: 1.0,
            lag_mean_drift_var: 1.0,
            lead_proportion_var: 1.0,
            lag_proportion_var: 1.0,
            cg_max_iter: 15,
            cg_tol: 1e-4,
            doc_max_iter: 100,
            doc_tol: 1e-6,
            sweep_max: 30,
            elbo_rel_tol: 1e-6,
            stage_sweeps: 10,
            init_seed: 0,
        }
    }

    /// Structural checks that do not depend on the corpus. Whether each
    /// side sees at least one topic (K+J ≥ 1, K+H ≥ 1) is checked at fit
    /// time against the sides actually present, so single-corpus baseline
    /// configurations (e.g. K = 0, H = 0 with every document on the lead
    /// side) stay expressible.
    pub fn validate(&self) -> Result<()> {
        if self.total_topics() < 1 {
            return Err(Error::Validation("need at least one topic".into()));
        }
        for (name, v) in [
            ("shared_drift_var", self.shared_drift_var),
            ("lead_drift_var", self.lead_drift_var),
            ("lag_drift_var", self.lag_drift_var),
            ("lead_prior", self.lead_prior),
            ("lag_prior", self.lag_prior),
            ("lead_mean_drift_var", self.lead_mean_drift_var),
            ("lag_mean_drift_var", self.lag_mean_drift_var),
            ("lead_proportion_var", self.lead_proportion_var),
            ("lag_proportion_var", self.lag_proportion_var),
            ("cg_tol", self.cg_tol),
            ("doc_tol", self.doc_tol),
            ("elbo_rel_tol", self.elbo_rel_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(v) = self.obs_var {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Validation(format!("obs_var must be positive, got {v}")));
            }
        }
        if self.cg_max_iter < 1 || self.doc_max_iter < 1 || self.sweep_max < 1 {
            return Err(Error::Validation("iteration caps must be >= 1".into()));
        }
        Ok(())
    }

    /// Drift variance of one chain type.
    pub fn drift_var(&self, kind: TopicKind) -> f64 {
        match kind {
            TopicKind::Shared => self.shared_drift_var,
            TopicKind::LeadSpecific => self.lead_drift_var,
            TopicKind::LagSpecific => self.lag_drift_var,
        }
    }

    /// Observation variance of one chain type.
    pub fn observation_var(&self, kind: TopicKind) -> f64 {
        self.obs_var.unwrap_or(10.0 * self.drift_var(kind))
    }

    /// Dirichlet prior scalar for documents of one side.
    pub fn prior(&self, side: crate::types::Side) -> f64 {
        match side {
            crate::types::Side::Lead => self.lead_prior,
            crate::types::Side::Lag => self.lag_prior,
        }
    }

    pub fn topic_count(&self, kind: TopicKind) -> u32 {
        match kind {
            TopicKind::Shared => self.shared_topics,
            TopicKind::LeadSpecific => self.lead_topics,
            TopicKind::LagSpecific => self.lag_topics,
        }
    }

    pub fn total_topics(&self) -> u32 {
        self.shared_topics + self.lead_topics + self.lag_topics
    }

    /// Sets every drift variance at once (convenience for experiments).
    pub fn with_drift_var(mut self, var: f64) -> Self {
        self.shared_drift_var = var;
        self.lead_drift_var = var;
        self.lag_drift_var = var;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.init_seed = seed;
        self
    }
}
