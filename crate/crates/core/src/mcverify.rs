//! Statistical estimators and diagnostics backing tests and the verify
//! command: sample covariance, Gaussian plug-in mutual information, discrete
//! plug-in entropy and MI, and rank trend tests.
//!
//! The MI estimator is the covariance-based Gaussian plug-in, not a
//! k-nearest-neighbor estimator: every pair this crate estimates is jointly
//! Gaussian by construction, so the plug-in is exact in expectation and cheap
//! at desk scale. It is NOT a general-purpose MI estimator and silently
//! underestimates for non-Gaussian dependence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("{which} sample variance {variance:.3e} is below 1e-12")]
    DegenerateVariance { which: &'static str, variance: f64 },
    #[error("sample correlation is 1 to machine precision; MI diverges")]
    PerfectCorrelation,
}

/// Point estimate with a delta-method or plug-in standard error.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    /// Estimate in nats.
    pub value: f64,
    /// Standard error of `value`, same unit; >= 0.
    pub std_error: f64,
    /// Sample size the estimate was computed from.
    pub count: usize,
}

/// Gaussian plug-in MI in nats: -1/2 ln(1 - r^2) from the sample correlation
/// r, with delta-method standard error |r|/sqrt(count).
///
/// Valid as an MI estimator only for jointly Gaussian pairs; for anything
/// else it measures linear dependence only. Requires at least 100 samples.
pub fn gaussian_mi_from_samples(pairs: &[(f64, f64)]) -> Result<EstimateWithCI, EstimateError> {
    let n = pairs.len();
    if n < 100 {
        return Err(EstimateError::TooFewSamples { got: n, need: 100 });
    }
    let nf = n as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for &(a, b) in pairs {
        mx += a;
        my += b;
    }
    mx /= nf;
    my /= nf;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    vx /= nf - 1.0;
    vy /= nf - 1.0;
    cxy /= nf - 1.0;
    for (which, variance) in [("first", vx), ("second", vy)] {
        if variance < 1e-12 {
            return Err(EstimateError::DegenerateVariance { which, variance });
        }
    }
    let r = cxy / (vx * vy).sqrt();
    let one_minus_r_sq = 1.0 - r * r;
    if one_minus_r_sq <= 1e-15 {
        return Err(EstimateError::PerfectCorrelation);
    }
    Ok(EstimateWithCI {
        value: -0.5 * one_minus_r_sq.ln(),
        std_error: r.abs() / nf.sqrt(),
        count: n,
    })
}

/// Plug-in entropy in nats of a discrete label stream. Counts live in a
/// BTreeMap so the summation order, and hence the exact float result, is
/// independent of the process's hash seed.
pub fn discrete_plugin_entropy(labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0) += 1;
    }
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in MI in nats from the empirical joint histogram of `pairs`, with the
/// plug-in standard error: sample standard deviation of the per-sample
/// log-density ratio divided by sqrt(count).
///
/// The estimator is biased upward by at most roughly
/// (|A|*|B| - 1) / (2*count) nats; `count` is reported so callers can judge.
/// Below 30 samples per joint cell a warning is printed to stderr. The value
/// is clamped at 0 (plug-in MI is nonnegative; only rounding can dip below).
pub fn discrete_plugin_mi(pairs: &[(usize, usize)]) -> Result<EstimateWithCI, EstimateError> {
    let n = pairs.len();
    if n < 2 {
        return Err(EstimateError::TooFewSamples { got: n, need: 2 });
    }
    let nf = n as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut left: BTreeMap<usize, usize> = BTreeMap::new();
    let mut right: BTreeMap<usize, usize> = BTreeMap::new();
    for &(a, b) in pairs {
        *joint.entry((a, b)).or_insert(0) += 1;
        *left.entry(a).or_insert(0) += 1;
        *right.entry(b).or_insert(0) += 1;
    }
    if n < 30 * left.len() * right.len() {
        eprintln!(
            "discrete_plugin_mi: {n} samples over a {}x{} alphabet; plug-in bias may dominate",
            left.len(),
            right.len()
        );
    }
    let mut mean = 0.0;
    let mut mean_sq = 0.0;
    for (&(a, b), &c) in &joint {
        let p_ab = c as f64 / nf;
        let ratio = (p_ab * nf * nf / (left[&a] as f64 * right[&b] as f64)).ln();
        let w = c as f64 / nf;
        mean += w * ratio;
        mean_sq += w * ratio * ratio;
    }
    let var = (mean_sq - mean * mean).max(0.0);
    Ok(EstimateWithCI {
        value: mean.max(0.0),
        std_error: (var / nf).sqrt(),
        count: n,
    })
}

/// Direction hypothesis for [`trend_test`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TrendDirection {
    Decreasing,
    Increasing,
}

/// One-sided Spearman rank test for a monotone trend in `xs` against its
/// index order. Ties get midranks. Returns the p-value.
///
/// Up to length 8 the permutation distribution is enumerated exactly, so a
/// strictly decreasing length-5 sequence yields p = 1/120 for `Decreasing`;
/// longer sequences use the normal approximation z = rho*sqrt(len-1).
/// Sequences shorter than 4, or with all values tied, carry no evidence and
/// return p = 1.
pub fn trend_test(xs: &[f64], direction: TrendDirection) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let ranks = midranks(xs);
    let mean = (n as f64 + 1.0) / 2.0;
    let var_r: f64 = ranks.iter().map(|r| (r - mean) * (r - mean)).sum();
    if var_r == 0.0 {
        return 1.0;
    }
    let rho_of = |perm: &[f64]| -> f64 {
        let mut num = 0.0;
        let mut var_i = 0.0;
        for (i, r) in perm.iter().enumerate() {
            let d_i = (i + 1) as f64 - mean;
            num += d_i * (r - mean);
            var_i += d_i * d_i;
        }
        num / (var_i * var_r).sqrt()
    };
    let observed = rho_of(&ranks);
    let extreme = |rho: f64| match direction {
        TrendDirection::Decreasing => rho <= observed + 1e-12,
        TrendDirection::Increasing => rho >= observed - 1e-12,
    };
    if n <= 8 {
        let mut perm = ranks.clone();
        let mut hits = 0usize;
        let mut total = 0usize;
        permutations(&mut perm, n, &mut |p| {
            total += 1;
            if extreme(rho_of(p)) {
                hits += 1;
            }
        });
        hits as f64 / total as f64
    } else {
        let z = observed * ((n - 1) as f64).sqrt();
        match direction {
            TrendDirection::Decreasing => normal_cdf(z),
            TrendDirection::Increasing => 1.0 - normal_cdf(z),
        }
    }
}

/// Sample covariance matrix (denominator count-1) of three-column rows.
pub fn covariance3(rows: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let n = rows.len() as f64;
    let mut mean = [0.0; 3];
    for r in rows {
        for k in 0..3 {
            mean[k] += r[k];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = [[0.0; 3]; 3];
    for r in rows {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row {
            *v /= n - 1.0;
        }
    }
    cov
}

fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("non-NaN values"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Heap's algorithm; calls `visit` on every permutation of `items[..k]`.
fn permutations(items: &mut [f64], k: usize, visit: &mut impl FnMut(&[f64])) {
    if k <= 1 {
        visit(items);
        return;
    }
    for i in 0..k {
        permutations(items, k - 1, visit);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf approximation
/// (absolute error below 1.5e-7, ample for threshold tests).
pub fn normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x.abs());
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf_abs = 1.0 - poly * (-x * x).exp();
    let erf = if x < 0.0 { -erf_abs } else { erf_abs };
    0.5 * (1.0 + erf)
}
