//! Numerically stable scalar utilities shared across the crate.
//!
//! All softmax / log-sum-exp computations subtract the maximum before
//! exponentiating, and probabilities are floored at [`PROB_FLOOR`] before
//! taking logs.

/// Smallest probability admitted before a log.
pub const PROB_FLOOR: f64 = 1e-300;

/// Arguments below this are clamped before evaluating the digamma function.
pub const DIGAMMA_MIN_ARG: f64 = 1e-6;

/// Digamma function Ψ(x) via upward recurrence and the asymptotic series.
///
/// Accurate to about 1e-12 for x ≥ 1e-6; smaller arguments are clamped.
pub fn digamma(x: f64) -> f64 {
    let mut x = x.max(DIGAMMA_MIN_ARG);
    let mut acc = 0.0;
    while x < 6.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln x - 1/(2x) - sum_{n>=1} B_{2n} / (2n x^{2n})
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
    acc + x.ln() - 0.5 * inv - series
}

/// ln Γ(x) for x > 0. Lanczos approximation, ~1e-13 relative accuracy.
pub fn ln_gamma(x: f64) -> f64 {
    // g = 7, n = 9 coefficients.
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

/// log Σ exp(x_i) with max subtraction. Empty input yields −∞.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Normalizes `xs` in place to exp(x_i) / Σ exp(x_j).
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let mut out = xs.to_vec();
    softmax_in_place(&mut out);
    out
}

/// x_i − log Σ exp(x_j), the log of the softmax.
pub fn log_softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|&x| x - lse).collect()
}

/// ln p with p floored at [`PROB_FLOOR`]. Returns the log and whether the
/// floor was applied.
pub fn floored_ln(p: f64) -> (f64, bool) {
    if p < PROB_FLOOR {
        (PROB_FLOOR.ln(), true)
    } else {
        (p.ln(), false)
    }
}

/// Jensen-Shannon divergence of two probability vectors, natural log base.
/// Bounded by ln 2.
pub fn js_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let mut js = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let mi = 0.5 * (pi + qi);
        if pi > 0.0 {
            js += 0.5 * pi * (pi / mi).ln();
        }
        if qi > 0.0 {
            js += 0.5 * qi * (qi / mi).ln();
        }
    }
    js
}

/// Pearson correlation of two equal-length samples. `None` when either side
/// has zero variance (or fewer than two points).
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}
