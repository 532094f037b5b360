//! Variational inference for the joint lead-lag topic model.
//!
//! Coordinate ascent alternates closed-form document updates (token
//! assignments λ and Dirichlet parameters τ) with conjugate-gradient updates
//! of Kalman-smoothed topic trajectories, linked across the two corpora by
//! shared chains read at an l-slice offset.

pub mod chain;
pub mod config;
pub mod counts;
pub mod document;
pub mod elbo;
pub mod fit;
pub mod layout;
pub mod model;

pub use chain::{
    chain_elbo, chain_elbo_and_gradient, kalman_smooth, update_chain, update_chain_with,
    CgOptions, ChainRead, ChainUpdate, SmoothResult, SmootherWeights, TopicChain,
};
pub use config::ModelConfig;
pub use counts::{accumulate_counts, ChainCounts, CountTensor};
pub use document::{update_document, DocOptions, DocumentPosterior};
pub use elbo::compute_elbo;
pub use fit::{fit, fit_single_side, init_state, FitState};
pub use layout::TopicLayout;
pub use model::{ChainPosterior, FittedModel};
