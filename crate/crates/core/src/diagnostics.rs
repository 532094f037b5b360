//! Model-external lead-lag diagnostics on word-frequency time series.
//!
//! Three tools: per-word relative-frequency series per corpus side, lagged
//! cross-correlation with a rough confidence band, and convergent cross
//! mapping (CCM) — delay-embed one series, predict the other by simplex
//! projection, and watch whether skill converges as the library of embedded
//! points grows. Surrogate testing uses circular shifts of the predicted
//! series, which preserve its autocorrelation while breaking any coupling.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusPair;
use crate::error::{Error, Result};
use crate::math::pearson;
use crate::seeding::rng_for;
use crate::types::Side;

/// Sub-seed tag for CCM library resamples.
const TAG_CCM_LIB: u64 = 31;
/// Sub-seed tag for CCM circular-shift surrogates.
const TAG_CCM_SURROGATE: u64 = 32;

/// Relative frequency of one word over the slices of one corpus side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencySeries {
    pub word: u32,
    pub side: Side,
    /// `values[t-1]` = count of the word in slice t / total tokens in slice t.
    pub values: Vec<f64>,
    /// 1-based slices that held no tokens at all; their value is 0.
    pub empty_slices: Vec<u32>,
}

/// Per-slice relative frequency of `word` on `side`.
pub fn word_frequency_series(
    corpus: &CorpusPair,
    word: u32,
    side: Side,
) -> Result<FrequencySeries> {
    if word >= corpus.vocab_size() {
        return Err(Error::Validation(format!(
            "word index {word} out of range for vocabulary of {}",
            corpus.vocab_size()
        )));
    }
    let totals = corpus.slice_token_totals(side);
    let mut values = Vec::with_capacity(totals.len());
    let mut empty_slices = Vec::new();
    for t in 1..=corpus.horizon() {
        let total = totals[(t - 1) as usize];
        if total == 0 {
            empty_slices.push(t);
            values.push(0.0);
            continue;
        }
        let count: u64 = corpus
            .slice(side, t)
            .iter()
            .flat_map(|doc| doc.counts.iter())
            .filter(|&(w, _)| w == word)
            .map(|(_, c)| u64::from(c))
            .sum();
        values.push(count as f64 / total as f64);
    }
    Ok(FrequencySeries {
        word,
        side,
        values,
        empty_slices,
    })
}

/// One lagged cross-correlation coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CcfPoint {
    pub lag: i64,
    /// `None` when an overlapping segment had zero variance.
    pub coefficient: Option<f64>,
}

/// Lagged cross-correlation over `[-max_lag, max_lag]`.
///
/// Sign convention: positive lag s pairs x_{t−s} with y_t, i.e. x *leads* y
/// by s slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcfResult {
    /// Coefficients in ascending lag order.
    pub points: Vec<CcfPoint>,
    /// Rough 95% null band half-width, 1.96/√n.
    pub band: f64,
    /// Full series length n.
    pub n: usize,
}

impl CcfResult {
    pub fn at(&self, lag: i64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.lag == lag)
            .and_then(|p| p.coefficient)
    }
}

/// Pearson correlation of the overlapping segments of `x` and `y` at every
/// shift in `[-max_lag, max_lag]`.
///
/// At positive lag s the pairs are (x_{t−s}, y_t); at negative lag x trails
/// instead. A segment with zero variance yields an undefined coefficient at
/// that lag rather than an error.
pub fn lagged_ccf(x: &[f64], y: &[f64], max_lag: usize) -> Result<CcfResult> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Diagnostics(format!(
            "series lengths differ: {n} vs {}",
            y.len()
        )));
    }
    if n <= max_lag + 2 {
        return Err(Error::Diagnostics(format!(
            "series length {n} too short for max lag {max_lag}"
        )));
    }
    let mut points = Vec::with_capacity(2 * max_lag + 1);
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        let s = lag.unsigned_abs() as usize;
        let (a, b) = if lag >= 0 {
            (&x[..n - s], &y[s..])
        } else {
            (&x[s..], &y[..n - s])
        };
        points.push(CcfPoint {
            lag,
            coefficient: pearson(a, b),
        });
    }
    Ok(CcfResult {
        points,
        band: 1.96 / (n as f64).sqrt(),
        n,
    })
}

/// CCM hyperparameters.
///
/// Defaults follow standard empirical-dynamic-modeling practice: embedding
/// dimension 3, delay 1, 8 geometric library sizes from E+2 up to n−E,
/// 20 resamples per size, 200 circular-shift surrogates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcmOptions {
    pub embedding_dim: usize,
    pub delay: usize,
    pub library_steps: usize,
    pub resamples: usize,
    pub surrogates: usize,
    pub seed: u64,
}

impl Default for CcmOptions {
    fn default() -> Self {
        CcmOptions {
            embedding_dim: 3,
            delay: 1,
            library_steps: 8,
            resamples: 20,
            surrogates: 200,
            seed: 0,
        }
    }
}

/// Cross-map skill as a function of library size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkillCurve {
    /// Strictly increasing library sizes.
    pub library_sizes: Vec<usize>,
    /// Mean cross-map correlation per size over resamples; `None` when no
    /// resample produced a defined correlation.
    pub rho_mean: Vec<Option<f64>>,
    /// Sample standard deviation per size (0 with fewer than two defined
    /// resamples).
    pub rho_sd: Vec<Option<f64>>,
    /// The CCM statistic: mean skill at the largest library size.
    pub terminal_rho: Option<f64>,
    /// Fraction of surrogates whose terminal skill reached the observed one.
    pub p_value: Option<f64>,
    /// Terminal skill was negative — reported as-is but implies no
    /// prediction skill.
    pub no_skill: bool,
    /// Degenerate embedding (all delay vectors identical): nothing to
    /// predict from.
    pub unpredictable: bool,
}

impl SkillCurve {
    fn unpredictable() -> Self {
        SkillCurve {
            library_sizes: Vec::new(),
            rho_mean: Vec::new(),
            rho_sd: Vec::new(),
            terminal_rho: None,
            p_value: None,
            no_skill: false,
            unpredictable: true,
        }
    }
}

/// Convergent cross mapping: how well the delay embedding of `y` predicts
/// `x`.
///
/// Embeds `y` with dimension E and delay τ_d, then for each library size
/// draws `resamples` random sub-libraries and predicts every embedded
/// point's concurrent `x` value by simplex projection (E+1 nearest library
/// neighbors, exponential distance weights, the point itself excluded).
/// Skill is the Pearson correlation of predictions with the true `x`.
/// Rising skill with library size indicates that `x`'s dynamics are
/// recoverable from `y` — evidence that x forces y.
///
/// The p-value is the fraction of circular-shift surrogates of `x` whose
/// terminal skill (through the identical neighbor structure) reaches the
/// observed one.
pub fn ccm(x: &[f64], y: &[f64], opts: &CcmOptions) -> Result<SkillCurve> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::Diagnostics(format!(
            "series lengths differ: {n} vs {}",
            y.len()
        )));
    }
    let e = opts.embedding_dim;
    let tau = opts.delay;
    if e < 1 || tau < 1 {
        return Err(Error::Diagnostics(
            "embedding dimension and delay must be at least 1".into(),
        ));
    }
    let min_len = (e - 1) * tau + e + 2;
    if n < min_len {
        return Err(Error::Diagnostics(format!(
            "series length {n} below minimum {min_len} for E={e}, delay={tau}"
        )));
    }
    if opts.resamples == 0 || opts.library_steps == 0 {
        return Err(Error::Diagnostics(
            "need at least one library size and one resample".into(),
        ));
    }

    // Delay vectors of y; embedded index i maps to series index i + offset.
    let offset = (e - 1) * tau;
    let m = n - offset;
    let points: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let s = i + offset;
            (0..e).map(|j| y[s - j * tau]).collect()
        })
        .collect();
    let targets: Vec<f64> = (0..m).map(|i| x[i + offset]).collect();
    if points.iter().all(|p| *p == points[0]) {
        return Ok(SkillCurve::unpredictable());
    }

    let sizes = geometric_sizes(e + 2, (n - e).min(m), opts.library_steps);
    let last = sizes.len() - 1;

    // Per size: resampled libraries → neighbor weights → skill. The terminal
    // size's weight rows are kept so surrogates reuse the exact structure.
    let mut rho_mean = Vec::with_capacity(sizes.len());
    let mut rho_sd = Vec::with_capacity(sizes.len());
    let mut terminal_rows: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    for (si, &l) in sizes.iter().enumerate() {
        let per_resample: Vec<(Option<f64>, Option<Vec<Vec<(usize, f64)>>>)> = (0..opts
            .resamples)
            .into_par_iter()
            .map(|rep| {
                let mut rng = rng_for(opts.seed, &[TAG_CCM_LIB, si as u64, rep as u64]);
                let lib = rand::seq::index::sample(&mut rng, m, l).into_vec();
                let rows = simplex_rows(&points, &lib, e);
                let rho = prediction_skill(&rows, &targets, &targets);
                let keep = (si == last).then_some(rows);
                (rho, keep)
            })
            .collect();
        let rhos: Vec<f64> = per_resample.iter().filter_map(|(r, _)| *r).collect();
        rho_mean.push(mean(&rhos));
        rho_sd.push(sample_sd(&rhos));
        if si == last {
            terminal_rows = per_resample.into_iter().filter_map(|(_, k)| k).collect();
        }
    }

    let terminal_rho = rho_mean[last];
    let p_value = match terminal_rho {
        None => None,
        Some(observed) => {
            let exceed = (0..opts.surrogates)
                .into_par_iter()
                .map(|s| {
                    let mut rng = rng_for(opts.seed, &[TAG_CCM_SURROGATE, s as u64]);
                    let shift = rng.random_range(1..n);
                    let shifted: Vec<f64> =
                        (0..m).map(|i| x[(i + offset + shift) % n]).collect();
                    let rhos: Vec<f64> = terminal_rows
                        .iter()
                        .filter_map(|rows| prediction_skill(rows, &shifted, &shifted))
                        .collect();
                    matches!(mean(&rhos), Some(r) if r >= observed)
                })
                .filter(|&b| b)
                .count();
            (opts.surrogates > 0).then(|| exceed as f64 / opts.surrogates as f64)
        }
    };

    Ok(SkillCurve {
        library_sizes: sizes,
        rho_mean,
        rho_sd,
        terminal_rho,
        p_value,
        no_skill: matches!(terminal_rho, Some(r) if r < 0.0),
        unpredictable: false,
    })
}

/// `steps` geometrically spaced sizes from `lo` to `hi`, deduplicated after
/// rounding (so the result is strictly increasing).
fn geometric_sizes(lo: usize, hi: usize, steps: usize) -> Vec<usize> {
    if hi <= lo {
        return vec![hi.max(2)];
    }
    let steps = steps.max(2);
    let (lo_f, hi_f) = (lo as f64, hi as f64);
    let mut sizes: Vec<usize> = (0..steps)
        .map(|i| {
            let frac = i as f64 / (steps - 1) as f64;
            (lo_f * (hi_f / lo_f).powf(frac)).round() as usize
        })
        .collect();
    sizes.dedup();
    sizes
}

/// Normalized simplex-projection weight rows: for each embedded point, its
/// E+1 nearest library neighbors (itself excluded) with weights
/// exp(−d/d₁). When the nearest distance is zero, the zero-distance
/// neighbors share the mass equally. Rows with too few neighbors stay empty
/// (prediction undefined there).
fn simplex_rows(points: &[Vec<f64>], lib: &[usize], e: usize) -> Vec<Vec<(usize, f64)>> {
    let k = e + 1;
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut cand: Vec<(f64, usize)> = lib
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| {
                    let d: f64 = p
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    (d, j)
                })
                .collect();
            if cand.len() < k {
                return Vec::new();
            }
            cand.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            cand.truncate(k);
            let d1 = cand[0].0;
            let raw: Vec<(usize, f64)> = if d1 == 0.0 {
                cand.iter()
                    .map(|&(d, j)| (j, if d == 0.0 { 1.0 } else { 0.0 }))
                    .collect()
            } else {
                cand.iter().map(|&(d, j)| (j, (-d / d1).exp())).collect()
            };
            let total: f64 = raw.iter().map(|(_, w)| w).sum();
            raw.into_iter().map(|(j, w)| (j, w / total)).collect()
        })
        .collect()
}

/// Pearson correlation between the true series and the weight-row
/// predictions, over the points where a prediction exists. `source` supplies
/// neighbor values (normally the same series as `truth`; surrogates swap
/// both consistently).
fn prediction_skill(
    rows: &[Vec<(usize, f64)>],
    source: &[f64],
    truth: &[f64],
) -> Option<f64> {
    let mut pred = Vec::with_capacity(rows.len());
    let mut obs = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        pred.push(row.iter().map(|&(j, w)| w * source[j]).sum::<f64>());
        obs.push(truth[i]);
    }
    pearson(&obs, &pred)
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn sample_sd(xs: &[f64]) -> Option<f64> {
    match xs.len() {
        0 => None,
        1 => Some(0.0),
        n => {
            let m = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            Some(var.sqrt())
        }
    }
}
