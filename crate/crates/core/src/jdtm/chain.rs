//! Topic-chain state: Kalman-smoothed variational family and the
//! conjugate-gradient update of its pseudo-observations.
//!
//! Each topic is a Gaussian random walk over vocabulary natural parameters.
//! The variational family attaches a pseudo-observation α̂[s][v] to every
//! chain slot and word; smoothing α̂ with a scalar Kalman filter/RTS smoother
//! per word yields the posterior moments m̃ (mean) and Ṽ (variance). The
//! smoothed mean is linear in α̂, so the S×S Jacobian ∂m̃/∂α̂ is fixed by
//! (σ², ν̂², S) and precomputed once per chain shape.
//!
//! The chain's ELBO contribution is
//!   −(1/2σ²) Σ_{s≥2} Σ_v (m̃_s,v − m̃_{s−1},v)²
//!   + Σ_{s,v} n_s,v · m̃_s,v
//!   − Σ_s n_s · (ζ̂_s⁻¹ Σ_v exp(m̃_s,v + Ṽ_s,v/2) − 1 + log ζ̂_s),
//! maximized over α̂ by Polak–Ribière conjugate gradient with the auxiliary
//! normalizer ζ̂ held fixed and re-tightened afterwards.

use crate::error::{Error, Result};
use crate::math::log_sum_exp;
use crate::types::{ChainSpan, TopicKind};

use super::counts::ChainCounts;

/// Diffuse-prior variance factor: v₀ = 1e3·σ².
const DIFFUSE_PRIOR_FACTOR: f64 = 1e3;
/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// Line-search step shrink factor.
const ARMIJO_SHRINK: f64 = 0.5;
/// Backtracking attempts before a line search counts as failed.
const MAX_BACKTRACKS: u32 = 60;
/// Failed line searches tolerated before giving up with a warning.
const MAX_LINE_SEARCH_FAILURES: u32 = 50;

/// Read-only view of a chain's posterior, shared by document updates and
/// held-out scoring.
pub trait ChainRead {
    fn kind(&self) -> TopicKind;
    fn span(&self) -> ChainSpan;
    fn m_tilde_at(&self, slot: usize, word: u32) -> f64;
    fn log_zeta_at(&self, slot: usize) -> f64;
}

/// Filter/smoother quantities that depend only on (σ², ν̂², S): gains,
/// variances, and the Jacobian of smoothed means in the observations.
#[derive(Debug, Clone)]
pub struct SmootherWeights {
    pub sigma2: f64,
    pub nu2: f64,
    len: usize,
    /// Forward Kalman gains g_s.
    gain: Vec<f64>,
    /// Filtered variances v_s.
    pub v_filt: Vec<f64>,
    /// Backward (RTS) gains c_s; index s valid for s < S−1.
    back: Vec<f64>,
    /// Smoothed variances Ṽ_s.
    pub v_smooth: Vec<f64>,
    /// jacobian[s][t] = ∂m̃_s/∂α̂_t.
    pub jacobian: Vec<Vec<f64>>,
}

impl SmootherWeights {
    pub fn new(sigma2: f64, nu2: f64, len: usize) -> Self {
        assert!(len >= 1 && sigma2 > 0.0 && nu2 > 0.0);
        let mut gain = Vec::with_capacity(len);
        let mut v_filt = Vec::with_capacity(len);
        let mut v_prev = DIFFUSE_PRIOR_FACTOR * sigma2;
        for _ in 0..len {
            let v_pred = v_prev + sigma2;
            let g = v_pred / (v_pred + nu2);
            let v = (1.0 - g) * v_pred;
            gain.push(g);
            v_filt.push(v);
            v_prev = v;
        }
        let mut back = vec![0.0; len];
        for s in 0..len.saturating_sub(1) {
            back[s] = v_filt[s] / (v_filt[s] + sigma2);
        }
        let mut v_smooth = vec![0.0; len];
        v_smooth[len - 1] = v_filt[len - 1];
        for s in (0..len - 1).rev() {
            v_smooth[s] = v_filt[s] + back[s].powi(2) * (v_smooth[s + 1] - (v_filt[s] + sigma2));
        }
        let mut weights = SmootherWeights {
            sigma2,
            nu2,
            len,
            gain,
            v_filt,
            back,
            v_smooth,
            jacobian: Vec::new(),
        };
        // Smoothing is linear in the observations with zero offset, so
        // column t of the Jacobian is the smoothed mean of the unit vector
        // e_t.
        let mut jacobian = vec![vec![0.0; len]; len];
        let mut unit = vec![0.0; len];
        let mut m_fwd = vec![0.0; len];
        let mut m_smooth = vec![0.0; len];
        for t in 0..len {
            unit[t] = 1.0;
            weights.smooth_means(&unit, &mut m_fwd, &mut m_smooth);
            for s in 0..len {
                jacobian[s][t] = m_smooth[s];
            }
            unit[t] = 0.0;
        }
        weights.jacobian = jacobian;
        weights
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Forward-filtered and backward-smoothed means of one observation
    /// sequence (variances are in `v_filt` / `v_smooth`).
    pub fn smooth_means(&self, obs: &[f64], m_fwd: &mut [f64], m_smooth: &mut [f64]) {
        let n = self.len;
        debug_assert_eq!(obs.len(), n);
        let mut m = 0.0; // diffuse prior mean
        for s in 0..n {
            m += self.gain[s] * (obs[s] - m);
            m_fwd[s] = m;
        }
        m_smooth[n - 1] = m_fwd[n - 1];
        for s in (0..n - 1).rev() {
            m_smooth[s] = m_fwd[s] + self.back[s] * (m_smooth[s + 1] - m_fwd[s]);
        }
    }
}

/// Moments of one smoothed observation sequence.
#[derive(Debug, Clone)]
pub struct SmoothResult {
    pub m_fwd: Vec<f64>,
    pub v_fwd: Vec<f64>,
    pub m_tilde: Vec<f64>,
    pub v_tilde: Vec<f64>,
}

/// Scalar Kalman filter + RTS smoother over one pseudo-observation sequence,
/// diffuse start (m₀ = 0, v₀ = 1e3·σ²).
pub fn kalman_smooth(alpha_hat: &[f64], sigma2: f64, nu2: f64) -> SmoothResult {
    let weights = SmootherWeights::new(sigma2, nu2, alpha_hat.len());
    let mut m_fwd = vec![0.0; alpha_hat.len()];
    let mut m_tilde = vec![0.0; alpha_hat.len()];
    weights.smooth_means(alpha_hat, &mut m_fwd, &mut m_tilde);
    SmoothResult {
        m_fwd,
        v_fwd: weights.v_filt.clone(),
        m_tilde,
        v_tilde: weights.v_smooth.clone(),
    }
}

/// One topic trajectory's variational state. Flat arrays are slot-major:
/// index `slot · V + word`.
#[derive(Debug, Clone)]
pub struct TopicChain {
    pub kind: TopicKind,
    pub index: u32,
    span: ChainSpan,
    vocab: usize,
    weights: SmootherWeights,
    alpha_hat: Vec<f64>,
    m_fwd: Vec<f64>,
    m_tilde: Vec<f64>,
    /// log ζ̂_s, stored in log space.
    log_zeta: Vec<f64>,
    /// Fingerprint of `alpha_hat` when moments were last refreshed.
    stamp: u64,
}

impl TopicChain {
    pub fn new(
        kind: TopicKind,
        index: u32,
        span: ChainSpan,
        vocab: usize,
        sigma2: f64,
        nu2: f64,
        alpha_hat: Vec<f64>,
    ) -> Result<Self> {
        if vocab == 0 {
            return Err(Error::Validation("chain needs a nonempty vocabulary".into()));
        }
        let expect = span.len() * vocab;
        if alpha_hat.len() != expect {
            return Err(Error::Validation(format!(
                "alpha_hat length {} != span {} × vocab {}",
                alpha_hat.len(),
                span.len(),
                vocab
            )));
        }
        let weights = SmootherWeights::new(sigma2, nu2, span.len());
        let mut chain = TopicChain {
            kind,
            index,
            span,
            vocab,
            weights,
            alpha_hat,
            m_fwd: vec![0.0; expect],
            m_tilde: vec![0.0; expect],
            log_zeta: vec![0.0; span.len()],
            stamp: 0,
        };
        chain.refresh();
        Ok(chain)
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn weights(&self) -> &SmootherWeights {
        &self.weights
    }

    pub fn alpha_hat(&self) -> &[f64] {
        &self.alpha_hat
    }

    pub fn m_tilde(&self) -> &[f64] {
        &self.m_tilde
    }

    pub fn m_fwd(&self) -> &[f64] {
        &self.m_fwd
    }

    pub fn v_filt_at(&self, slot: usize) -> f64 {
        self.weights.v_filt[slot]
    }

    /// Smoothed variance Ṽ_s; identical for every word of a slot because the
    /// variance recursions never see the observations.
    pub fn v_smooth_at(&self, slot: usize) -> f64 {
        self.weights.v_smooth[slot]
    }

    pub fn log_zeta(&self) -> &[f64] {
        &self.log_zeta
    }

    /// Replaces the pseudo-observations and refreshes moments and ζ̂.
    pub fn set_alpha_hat(&mut self, alpha_hat: Vec<f64>) {
        assert_eq!(alpha_hat.len(), self.alpha_hat.len());
        self.alpha_hat = alpha_hat;
        self.refresh();
    }

    fn refresh(&mut self) {
        let s_len = self.span.len();
        let v = self.vocab;
        let mut obs = vec![0.0; s_len];
        let mut fwd = vec![0.0; s_len];
        let mut smooth = vec![0.0; s_len];
        for w in 0..v {
            for s in 0..s_len {
                obs[s] = self.alpha_hat[s * v + w];
            }
            self.weights.smooth_means(&obs, &mut fwd, &mut smooth);
            for s in 0..s_len {
                self.m_fwd[s * v + w] = fwd[s];
                self.m_tilde[s * v + w] = smooth[s];
            }
        }
        self.refresh_zeta();
        self.stamp = fingerprint(&self.alpha_hat);
    }

    /// ζ̂_s = Σ_v exp(m̃_s,v + Ṽ_s/2), the bound-tightening optimum; Ṽ is
    /// constant across words so it factors out of the log-sum-exp.
    fn refresh_zeta(&mut self) {
        let v = self.vocab;
        for s in 0..self.span.len() {
            let row = &self.m_tilde[s * v..(s + 1) * v];
            self.log_zeta[s] = log_sum_exp(row) + 0.5 * self.weights.v_smooth[s];
        }
    }

    fn check_fresh(&self) -> Result<()> {
        if fingerprint(&self.alpha_hat) != self.stamp {
            return Err(Error::StaleMoments);
        }
        Ok(())
    }
}

impl ChainRead for TopicChain {
    fn kind(&self) -> TopicKind {
        self.kind
    }

    fn span(&self) -> ChainSpan {
        self.span
    }

    fn m_tilde_at(&self, slot: usize, word: u32) -> f64 {
        self.m_tilde[slot * self.vocab + word as usize]
    }

    fn log_zeta_at(&self, slot: usize) -> f64 {
        self.log_zeta[slot]
    }
}

/// FNV-1a over the raw bit patterns; used to detect stale moments.
fn fingerprint(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &x in values {
        for byte in x.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    // Zero is reserved for "never refreshed".
    h.max(1)
}

/// The chain's ELBO contribution at given smoothed means, with ζ̂ fixed.
fn objective(
    m_tilde: &[f64],
    v_smooth: &[f64],
    log_zeta: &[f64],
    counts: &ChainCounts,
    sigma2: f64,
    vocab: usize,
) -> f64 {
    let s_len = v_smooth.len();
    let mut drift = 0.0;
    for s in 1..s_len {
        let (prev, cur) = (&m_tilde[(s - 1) * vocab..s * vocab], &m_tilde[s * vocab..(s + 1) * vocab]);
        for w in 0..vocab {
            let d = cur[w] - prev[w];
            drift += d * d;
        }
    }
    let mut data = 0.0;
    let mut shifted = vec![0.0; vocab];
    for s in 0..s_len {
        let row = &m_tilde[s * vocab..(s + 1) * vocab];
        let mut dot = 0.0;
        for w in 0..vocab {
            dot += counts.n[s * vocab + w] * row[w];
            shifted[w] = row[w] + 0.5 * v_smooth[s];
        }
        let log_e = log_sum_exp(&shifted);
        data += dot - counts.totals[s] * ((log_e - log_zeta[s]).exp() - 1.0 + log_zeta[s]);
    }
    -drift / (2.0 * sigma2) + data
}

/// ∂objective/∂m̃ at fixed ζ̂ — the per-(slot, word) coefficients that the
/// smoothing Jacobian maps back to α̂ space.
fn moment_coefficients(
    m_tilde: &[f64],
    v_smooth: &[f64],
    log_zeta: &[f64],
    counts: &ChainCounts,
    sigma2: f64,
    vocab: usize,
    coef: &mut [f64],
) {
    let s_len = v_smooth.len();
    for s in 0..s_len {
        for w in 0..vocab {
            let i = s * vocab + w;
            // Drift: with d_s = m̃_s − m̃_{s−1} (d_1 = d_{S+1} = 0),
            // ∂drift/∂m̃_s = (d_{s+1} − d_s)/σ².
            let d_next = if s + 1 < s_len {
                m_tilde[(s + 1) * vocab + w] - m_tilde[i]
            } else {
                0.0
            };
            let d_cur = if s > 0 {
                m_tilde[i] - m_tilde[(s - 1) * vocab + w]
            } else {
                0.0
            };
            let drift = (d_next - d_cur) / sigma2;
            let data = counts.n[i]
                - counts.totals[s] * (m_tilde[i] + 0.5 * v_smooth[s] - log_zeta[s]).exp();
            coef[i] = drift + data;
        }
    }
}

/// Maps moment-space coefficients through the smoothing Jacobian:
/// grad[t][v] = Σ_s J[s][t] · coef[s][v].
fn pull_back(weights: &SmootherWeights, coef: &[f64], vocab: usize, grad: &mut [f64]) {
    let s_len = weights.len();
    let jac = &weights.jacobian;
    for w in 0..vocab {
        for t in 0..s_len {
            let mut acc = 0.0;
            for (s, row) in jac.iter().enumerate() {
                acc += row[t] * coef[s * vocab + w];
            }
            grad[t * vocab + w] = acc;
        }
    }
}

/// ELBO contribution of a chain and its exact gradient in the
/// pseudo-observations, at the chain's current committed state.
///
/// Errors if the smoothed moments are stale relative to `alpha_hat`.
pub fn chain_elbo_and_gradient(
    chain: &TopicChain,
    counts: &ChainCounts,
) -> Result<(f64, Vec<f64>)> {
    chain.check_fresh()?;
    counts.check_shape(chain.span.len(), chain.vocab)?;
    let sigma2 = chain.weights.sigma2;
    let value = objective(
        &chain.m_tilde,
        &chain.weights.v_smooth,
        &chain.log_zeta,
        counts,
        sigma2,
        chain.vocab,
    );
    if !value.is_finite() {
        return Err(Error::NonFiniteElbo {
            term: format!("{} chain {}", chain.kind, chain.index),
        });
    }
    let mut coef = vec![0.0; chain.m_tilde.len()];
    moment_coefficients(
        &chain.m_tilde,
        &chain.weights.v_smooth,
        &chain.log_zeta,
        counts,
        sigma2,
        chain.vocab,
        &mut coef,
    );
    let mut grad = vec![0.0; chain.m_tilde.len()];
    pull_back(&chain.weights, &coef, chain.vocab, &mut grad);
    Ok((value, grad))
}

/// The chain's ELBO contribution (no gradient) at its committed state.
pub fn chain_elbo(chain: &TopicChain, counts: &ChainCounts) -> Result<f64> {
    chain.check_fresh()?;
    counts.check_shape(chain.span.len(), chain.vocab)?;
    let value = objective(
        &chain.m_tilde,
        &chain.weights.v_smooth,
        &chain.log_zeta,
        counts,
        chain.weights.sigma2,
        chain.vocab,
    );
    if !value.is_finite() {
        return Err(Error::NonFiniteElbo {
            term: format!("{} chain {}", chain.kind, chain.index),
        });
    }
    Ok(value)
}

/// α̂-independent ELBO pieces of one chain: the variance part of the drift
/// expectation and the entropy of the smoothing posterior. Both depend only
/// on (σ², ν̂², S, V); they shift the reported ELBO without affecting any
/// update.
pub fn chain_constant_terms(chain: &TopicChain) -> f64 {
    use std::f64::consts::{E, PI};
    let w = &chain.weights;
    let sigma2 = w.sigma2;
    let s_len = w.len();
    let mut per_word = 0.0;
    // E_q[log p(β_s|β_{s−1})] variance part, s = 2..S; the smoothing
    // cross-covariance of adjacent states is c_{s−1}·Ṽ_s.
    for s in 1..s_len {
        let cov = w.back[s - 1] * w.v_smooth[s];
        per_word += -(w.v_smooth[s] + w.v_smooth[s - 1] - 2.0 * cov) / (2.0 * sigma2)
            - 0.5 * (2.0 * PI * sigma2).ln();
    }
    // Entropy through the backward factorization q(β_S)·Π q(β_s|β_{s+1});
    // the conditional variance v_s(1 − c_s) never sees the observations.
    per_word += 0.5 * (2.0 * PI * E * w.v_smooth[s_len - 1]).ln();
    for s in 0..s_len - 1 {
        let cond = w.v_filt[s] * (1.0 - w.back[s]);
        per_word += 0.5 * (2.0 * PI * E * cond).ln();
    }
    per_word * chain.vocab as f64
}

/// Options for one conjugate-gradient chain update.
#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub max_iter: u32,
    pub tol: f64,
}

/// Outcome of one chain update.
#[derive(Debug, Clone, Copy)]
pub struct ChainUpdate {
    pub elbo_before: f64,
    pub elbo_after: f64,
    pub accepted_steps: u32,
    pub line_search_failures: u32,
    /// Set when the line-search failure budget was exhausted.
    pub warning: bool,
}

/// Maximizes the chain's ELBO contribution over α̂ by Polak–Ribière
/// conjugate gradient with Armijo backtracking, ζ̂ held fixed during the
/// search and re-tightened (with the moments) on commit.
pub fn update_chain(chain: &mut TopicChain, counts: &ChainCounts) -> Result<ChainUpdate> {
    update_chain_with(chain, counts, CgOptions { max_iter: 15, tol: 1e-4 })
}

pub fn update_chain_with(
    chain: &mut TopicChain,
    counts: &ChainCounts,
    opts: CgOptions,
) -> Result<ChainUpdate> {
    chain.check_fresh()?;
    counts.check_shape(chain.span.len(), chain.vocab)?;
    let vocab = chain.vocab;
    let s_len = chain.span.len();
    let dim = s_len * vocab;
    let sigma2 = chain.weights.sigma2;
    // ζ̂ is frozen for the whole search; the objective stays a valid lower
    // bound and its maximizer re-tightens ζ̂ afterwards.
    let log_zeta = chain.log_zeta.clone();

    // Work on a flat copy of α̂; evaluate trial points by re-smoothing.
    let mut x = chain.alpha_hat.clone();
    let mut m_scratch = vec![0.0; dim];
    let mut fwd_buf = vec![0.0; s_len];
    let mut smooth_buf = vec![0.0; s_len];
    let mut obs_buf = vec![0.0; s_len];
    let mut smooth_into = |x: &[f64], m_out: &mut [f64], weights: &SmootherWeights| {
        for w in 0..vocab {
            for s in 0..s_len {
                obs_buf[s] = x[s * vocab + w];
            }
            weights.smooth_means(&obs_buf, &mut fwd_buf, &mut smooth_buf);
            for s in 0..s_len {
                m_out[s * vocab + w] = smooth_buf[s];
            }
        }
    };

    let weights = chain.weights.clone();
    let eval = |m_tilde: &[f64]| -> f64 {
        objective(m_tilde, &weights.v_smooth, &log_zeta, counts, sigma2, vocab)
    };
    let grad_at = |m_tilde: &[f64], grad: &mut [f64], coef: &mut [f64]| {
        moment_coefficients(m_tilde, &weights.v_smooth, &log_zeta, counts, sigma2, vocab, coef);
        pull_back(&weights, coef, vocab, grad);
    };

    smooth_into(&x, &mut m_scratch, &weights);
    let elbo_before = eval(&m_scratch);
    if !elbo_before.is_finite() {
        return Err(Error::NonFiniteElbo {
            term: format!("{} chain {}", chain.kind, chain.index),
        });
    }

    let mut coef = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    grad_at(&m_scratch, &mut grad, &mut coef);

    let mut f = elbo_before;
    // Direction of ascent; CG state.
    let mut dir: Vec<f64> = grad.clone();
    let mut steepest = true;
    let mut accepted: u32 = 0;
    let mut failures: u32 = 0;
    let mut warning = false;
    let restart_every = (dim as u32).max(1);
    let mut trial = vec![0.0; dim];
    let mut m_trial = vec![0.0; dim];
    let mut grad_new = vec![0.0; dim];

    let mut iter = 0;
    while iter < opts.max_iter {
        let gnorm = grad.iter().fold(0.0_f64, |a, &g| a.max(g.abs()));
        if gnorm < 1e-12 {
            break; // already at a stationary point
        }
        let mut slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if slope <= 0.0 {
            // Non-ascent direction: restart along the gradient.
            dir.copy_from_slice(&grad);
            steepest = true;
            slope = grad.iter().map(|g| g * g).sum();
        }

        let mut step = 1.0;
        let mut accepted_step = false;
        let mut f_trial = f;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                trial[i] = x[i] + step * dir[i];
            }
            smooth_into(&trial, &mut m_trial, &weights);
            f_trial = eval(&m_trial);
            if f_trial.is_finite() && f_trial >= f + ARMIJO_C * step * slope {
                accepted_step = true;
                break;
            }
            step *= ARMIJO_SHRINK;
        }

        if !accepted_step {
            failures += 1;
            if failures >= MAX_LINE_SEARCH_FAILURES {
                warning = true;
                break;
            }
            if steepest {
                // Even steepest ascent cannot improve: numerically converged.
                break;
            }
            dir.copy_from_slice(&grad);
            steepest = true;
            continue;
        }

        x.copy_from_slice(&trial);
        std::mem::swap(&mut m_scratch, &mut m_trial);
        accepted += 1;
        iter += 1;

        grad_at(&m_scratch, &mut grad_new, &mut coef);
        let g_dot: f64 = grad.iter().map(|g| g * g).sum();
        let pr: f64 = grad_new
            .iter()
            .zip(&grad)
            .map(|(gn, g)| gn * (gn - g))
            .sum();
        let beta = (pr / g_dot.max(f64::MIN_POSITIVE)).max(0.0);
        if accepted % restart_every == 0 || beta == 0.0 {
            for i in 0..dim {
                dir[i] = grad_new[i];
            }
            steepest = true;
        } else {
            for i in 0..dim {
                dir[i] = grad_new[i] + beta * dir[i];
            }
            steepest = false;
        }
        std::mem::swap(&mut grad, &mut grad_new);

        let rel = (f_trial - f).abs() / f.abs().max(1e-12);
        f = f_trial;
        if rel < opts.tol {
            break;
        }
    }

    chain.set_alpha_hat(x);
    let elbo_after = objective(
        &chain.m_tilde,
        &chain.weights.v_smooth,
        &chain.log_zeta,
        counts,
        sigma2,
        vocab,
    );
    Ok(ChainUpdate {
        elbo_before,
        elbo_after,
        accepted_steps: accepted,
        line_search_failures: failures,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    use crate::seeding::rng_for;

    fn unit_counts(s_len: usize, vocab: usize, fill: f64) -> ChainCounts {
        ChainCounts::from_dense(vec![fill; s_len * vocab], vocab)
    }

    fn test_chain(s_len: usize, vocab: usize, sigma2: f64, nu2: f64, alpha: Vec<f64>) -> TopicChain {
        let span = ChainSpan::specific(s_len as u32);
        TopicChain::new(TopicKind::LeadSpecific, 0, span, vocab, sigma2, nu2, alpha).unwrap()
    }

    /// Exact posterior for the smoothing model by dense precision-matrix
    /// inversion: prior N(0, v₀+σ²) on the first state, drift σ², equal
    /// observation noise ν̂² on every state.
    fn dense_posterior(obs: &[f64], sigma2: f64, nu2: f64) -> (Vec<f64>, Vec<f64>) {
        let n = obs.len();
        let v0 = DIFFUSE_PRIOR_FACTOR * sigma2;
        let mut prec = vec![vec![0.0; n]; n];
        let mut b = vec![0.0; n];
        prec[0][0] += 1.0 / (v0 + sigma2);
        for s in 1..n {
            prec[s][s] += 1.0 / sigma2;
            prec[s - 1][s - 1] += 1.0 / sigma2;
            prec[s][s - 1] -= 1.0 / sigma2;
            prec[s - 1][s] -= 1.0 / sigma2;
        }
        for s in 0..n {
            prec[s][s] += 1.0 / nu2;
            b[s] += obs[s] / nu2;
        }
        // Gauss-Jordan inversion.
        let mut aug: Vec<Vec<f64>> = prec
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .unwrap();
            aug.swap(col, pivot);
            let p = aug[col][col];
            for x in aug[col].iter_mut() {
                *x /= p;
            }
            for row in 0..n {
                if row != col {
                    let factor = aug[row][col];
                    for j in 0..2 * n {
                        aug[row][j] -= factor * aug[col][j];
                    }
                }
            }
        }
        let mut mean = vec![0.0; n];
        let mut var = vec![0.0; n];
        for i in 0..n {
            var[i] = aug[i][n + i];
            for j in 0..n {
                mean[i] += aug[i][n + j] * b[j];
            }
        }
        (mean, var)
    }

    #[test]
    fn smoother_matches_dense_gaussian_posterior() {
        let obs = [0.0, 1.0, 2.0];
        let result = kalman_smooth(&obs, 1.0, 1.0);
        let (mean, var) = dense_posterior(&obs, 1.0, 1.0);
        for s in 0..3 {
            assert_abs_diff_eq!(result.m_tilde[s], mean[s], epsilon = 1e-8);
            assert_abs_diff_eq!(result.v_tilde[s], var[s], epsilon = 1e-8);
        }
    }

    #[test]
    fn constant_observations_recovered() {
        // Tight observations pin the posterior at the constant signal.
        let r = kalman_smooth(&[1.0, 1.0, 1.0], 1.0, 1e-6);
        for &m in &r.m_tilde {
            assert_abs_diff_eq!(m, 1.0, epsilon = 1e-6);
        }
        // With ν̂² = σ² the diffuse (finite, v₀ = 1e3·σ²) prior still shrinks
        // the constant signal by O(1/v₀); exact recovery needs v₀ → ∞.
        let r = kalman_smooth(&[1.0, 1.0, 1.0], 1.0, 1.0);
        for &m in &r.m_tilde {
            assert_abs_diff_eq!(m, 1.0, epsilon = 2e-3);
            assert!(m < 1.0);
        }
    }

    #[test]
    fn uninformative_observations_fall_back_to_prior() {
        let sigma2 = 1.0;
        let r = kalman_smooth(&[5.0, -3.0, 7.0, 1.0], sigma2, 1e12);
        for &m in &r.m_tilde {
            assert!(m.abs() < 1e-6, "m = {m}");
        }
        // Ṽ_s ≈ v₀ + s·σ² (prior marginal variance, nothing learned).
        let v0 = DIFFUSE_PRIOR_FACTOR * sigma2;
        for (i, &v) in r.v_tilde.iter().enumerate() {
            let expect = v0 + (i as f64 + 1.0) * sigma2;
            assert!((v - expect).abs() / expect < 1e-6, "v[{i}] = {v}");
        }
    }

    #[test]
    fn smoothed_mean_is_linear_with_precomputed_jacobian() {
        let weights = SmootherWeights::new(0.5, 2.0, 4);
        let obs = [0.3, -1.2, 0.7, 2.0];
        let mut fwd = vec![0.0; 4];
        let mut smooth = vec![0.0; 4];
        weights.smooth_means(&obs, &mut fwd, &mut smooth);
        for s in 0..4 {
            let via_jacobian: f64 = (0..4).map(|t| weights.jacobian[s][t] * obs[t]).sum();
            assert_abs_diff_eq!(smooth[s], via_jacobian, epsilon = 1e-12);
        }
    }

    #[test]
    fn zeta_matches_from_scratch_recomputation() {
        let mut rng = rng_for(3, &[9]);
        let alpha: Vec<f64> = (0..3 * 5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let chain = test_chain(3, 5, 0.4, 1.0, alpha);
        for s in 0..3 {
            let direct: f64 = (0..5u32)
                .map(|w| (chain.m_tilde_at(s, w) + 0.5 * chain.v_smooth_at(s)).exp())
                .sum();
            let stored = chain.log_zeta()[s].exp();
            assert!((direct - stored).abs() / direct < 1e-10);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = rng_for(17, &[1]);
        for case in 0..10 {
            let (s_len, vocab) = (3, 4);
            let alpha: Vec<f64> = (0..s_len * vocab)
                .map(|_| rng.random_range(-1.5..1.5))
                .collect();
            let n: Vec<f64> = (0..s_len * vocab)
                .map(|_| rng.random_range(0.0..8.0))
                .collect();
            let counts = ChainCounts::from_dense(n, vocab);
            let sigma2 = rng.random_range(0.05..1.0);
            let nu2 = rng.random_range(0.1..2.0);
            let chain = test_chain(s_len, vocab, sigma2, nu2, alpha.clone());
            let (_, grad) = chain_elbo_and_gradient(&chain, &counts).unwrap();

            let log_zeta = chain.log_zeta().to_vec();
            let weights = chain.weights().clone();
            let f = |a: &[f64]| {
                let mut m_fwd = vec![0.0; s_len];
                let mut m_s = vec![0.0; s_len];
                let mut m_tilde = vec![0.0; s_len * vocab];
                let mut obs = vec![0.0; s_len];
                for w in 0..vocab {
                    for s in 0..s_len {
                        obs[s] = a[s * vocab + w];
                    }
                    weights.smooth_means(&obs, &mut m_fwd, &mut m_s);
                    for s in 0..s_len {
                        m_tilde[s * vocab + w] = m_s[s];
                    }
                }
                objective(&m_tilde, &weights.v_smooth, &log_zeta, &counts, sigma2, vocab)
            };
            let h = 1e-5;
            for i in 0..s_len * vocab {
                let mut plus = alpha.clone();
                plus[i] += h;
                let mut minus = alpha.clone();
                minus[i] -= h;
                let fd = (f(&plus) - f(&minus)) / (2.0 * h);
                let denom = fd.abs().max(grad[i].abs()).max(1e-8);
                assert!(
                    (fd - grad[i]).abs() / denom <= 1e-4,
                    "case {case} coord {i}: fd {fd} vs grad {}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn flat_zero_chain_with_no_data_has_zero_gradient() {
        // All-zero observations smooth to exactly zero means, so the drift
        // term's gradient vanishes identically; with zero counts the data
        // coefficients are n − n_s·(...) = 0 as well.
        let chain = test_chain(4, 3, 0.7, 1.3, vec![0.0; 12]);
        let counts = unit_counts(4, 3, 0.0);
        let (_, grad) = chain_elbo_and_gradient(&chain, &counts).unwrap();
        for (i, &g) in grad.iter().enumerate() {
            assert!(g.abs() < 1e-14, "grad[{i}] = {g}");
        }
    }

    #[test]
    fn flat_nonzero_chain_has_near_zero_drift_gradient() {
        // A constant nonzero signal is *almost* stationary for the drift
        // term: the finite diffuse prior (v₀ = 1e3·σ²) shrinks early slots
        // by O(1/v₀), leaving a gradient of the same order.
        let chain = test_chain(4, 3, 1.0, 1.0, vec![2.0; 12]);
        let counts = unit_counts(4, 3, 0.0);
        let (_, grad) = chain_elbo_and_gradient(&chain, &counts).unwrap();
        for &g in &grad {
            assert!(g.abs() < 5e-3, "drift gradient {g}");
        }
    }

    #[test]
    fn data_gradient_is_linear_in_counts() {
        let mut rng = rng_for(29, &[2]);
        let alpha: Vec<f64> = (0..3 * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n: Vec<f64> = (0..3 * 4).map(|_| rng.random_range(0.0..5.0)).collect();
        let chain = test_chain(3, 4, 0.3, 0.9, alpha);
        let zero = ChainCounts::from_dense(vec![0.0; 12], 4);
        let single = ChainCounts::from_dense(n.clone(), 4);
        let double = ChainCounts::from_dense(n.iter().map(|x| 2.0 * x).collect(), 4);
        let (_, g0) = chain_elbo_and_gradient(&chain, &zero).unwrap();
        let (_, g1) = chain_elbo_and_gradient(&chain, &single).unwrap();
        let (_, g2) = chain_elbo_and_gradient(&chain, &double).unwrap();
        for i in 0..12 {
            let data1 = g1[i] - g0[i];
            let data2 = g2[i] - g0[i];
            assert_abs_diff_eq!(data2, 2.0 * data1, epsilon = 1e-9);
        }
    }

    #[test]
    fn stale_moments_are_rejected() {
        let mut chain = test_chain(2, 2, 0.5, 1.0, vec![0.1; 4]);
        chain.alpha_hat[0] = 9.0; // bypasses set_alpha_hat on purpose
        let counts = unit_counts(2, 2, 1.0);
        let err = chain_elbo_and_gradient(&chain, &counts).unwrap_err();
        assert!(matches!(err, Error::StaleMoments));
    }

    #[test]
    fn update_from_stationary_point_is_a_no_op() {
        let chain0 = test_chain(3, 3, 0.5, 1.0, vec![0.0; 9]);
        let mut chain = chain0.clone();
        let counts = unit_counts(3, 3, 0.0);
        let outcome = update_chain(&mut chain, &counts).unwrap();
        assert_eq!(outcome.accepted_steps, 0);
        assert_eq!(chain.alpha_hat(), chain0.alpha_hat());
    }

    #[test]
    fn chain_update_never_decreases_its_elbo() {
        for seed in 0..20u64 {
            let mut rng = rng_for(seed, &[5]);
            let (s_len, vocab) = (4, 6);
            let alpha: Vec<f64> = (0..s_len * vocab)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect();
            let n: Vec<f64> = (0..s_len * vocab)
                .map(|_| rng.random_range(0.0..20.0))
                .collect();
            let mut chain = test_chain(s_len, vocab, 0.2, 1.0, alpha);
            let counts = ChainCounts::from_dense(n, vocab);
            let outcome = update_chain(&mut chain, &counts).unwrap();
            assert!(
                outcome.elbo_after >= outcome.elbo_before - 1e-9 * outcome.elbo_before.abs(),
                "seed {seed}: {} -> {}",
                outcome.elbo_before,
                outcome.elbo_after
            );
            assert!(!outcome.warning);
        }
    }

    #[test]
    fn dominant_word_wins_every_slot_after_update() {
        let (s_len, vocab) = (4, 5);
        let star = 2usize;
        let mut n = vec![0.01; s_len * vocab];
        for s in 0..s_len {
            n[s * vocab + star] = 200.0;
        }
        let counts = ChainCounts::from_dense(n, vocab);
        let mut chain = test_chain(s_len, vocab, 0.5, 1.0, vec![0.0; s_len * vocab]);
        for _ in 0..6 {
            update_chain_with(&mut chain, &counts, CgOptions { max_iter: 40, tol: 1e-8 }).unwrap();
        }
        for s in 0..s_len {
            let row: Vec<f64> = (0..vocab as u32).map(|w| chain.m_tilde_at(s, w)).collect();
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            assert_eq!(argmax, star, "slot {s}: {row:?}");
        }
    }
}
