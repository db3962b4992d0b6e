use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{RandomSource, VarConvention};
use crate::par::{map_range, Execution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("alpha {0} outside (0, 1]")]
    BadAlpha(f64),
    #[error("bad histogram: {0}")]
    BadHistogram(String),
}

fn check(costs: &[f64], alpha: f64) -> Result<(), StatsError> {
    if costs.is_empty() {
        return Err(StatsError::Empty);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(StatsError::BadAlpha(alpha));
    }
    Ok(())
}

/// Number of samples in the α-tail: `⌈αN⌉`, at least one.
fn tail_count(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Empirical VaR of an ascending sample. Lower: smallest value with at
/// least a (1 − α) fraction of the sample at or below it. Upper: smallest
/// value with more than that fraction. `margin` steps one order statistic
/// down.
pub fn sample_quantile(sorted: &[f64], alpha: f64, conv: VarConvention, margin: bool) -> f64 {
    let n = sorted.len();
    let level = (1.0 - alpha) * n as f64;
    let idx = match conv {
        VarConvention::Lower => ((level - 1e-9).ceil() as usize).max(1) - 1,
        VarConvention::Upper => ((level + 1e-9).floor() as usize).min(n - 1),
    };
    let idx = if margin { idx.saturating_sub(1) } else { idx };
    sorted[idx]
}

/// `(VaR, CVaR)` of a cost sample; CVaR is the mean of the worst `⌈αN⌉`.
pub fn empirical_cvar(
    costs: &[f64],
    alpha: f64,
    conv: VarConvention,
) -> Result<(f64, f64), StatsError> {
    check(costs, alpha)?;
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = tail_count(sorted.len(), alpha);
    let tail: f64 = sorted[sorted.len() - k..].iter().sum();
    Ok((
        sample_quantile(&sorted, alpha, conv, false),
        tail / k as f64,
    ))
}

/// Sample mean and its standard error `sd / √N`.
pub fn mean_and_se(costs: &[f64]) -> Result<(f64, f64), StatsError> {
    if costs.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    if costs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Bootstrap standard error of the empirical CVaR.
pub fn bootstrap_cvar_se(
    costs: &[f64],
    alpha: f64,
    resamples: usize,
    source: RandomSource,
    exec: Execution,
) -> Result<f64, StatsError> {
    check(costs, alpha)?;
    if resamples < 2 {
        return Ok(0.0);
    }
    let n = costs.len();
    let mut desc = costs.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    let k = tail_count(n, alpha);
    let estimates = map_range(exec, resamples, |b| {
        let mut rng = source.episode(b as u64);
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        // walk the original sample from the worst value down
        let mut left = k;
        let mut acc = 0.0;
        for (c, &m) in desc.iter().zip(&counts) {
            let take = (m as usize).min(left);
            acc += c * take as f64;
            left -= take;
            if left == 0 {
                break;
            }
        }
        acc / k as f64
    });
    let r = resamples as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok(var.sqrt())
}

/// Equal-width histogram; `edges` has one more entry than `counts`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal bins over the observed range. A constant sample gets a
    /// unit-width range starting at its value.
    pub fn with_bins(costs: &[f64], bins: usize) -> Result<Self, StatsError> {
        if costs.is_empty() {
            return Err(StatsError::Empty);
        }
        if bins == 0 {
            return Err(StatsError::BadHistogram("zero bins".into()));
        }
        let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            hi = lo + 1.0;
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        edges[bins] = hi;
        Ok(Self::fill(costs, edges))
    }

    /// Bins of width `width` aligned to multiples of it.
    pub fn with_width(costs: &[f64], width: f64) -> Result<Self, StatsError> {
        if costs.is_empty() {
            return Err(StatsError::Empty);
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(StatsError::BadHistogram(format!("bin width {width}")));
        }
        let lo_v = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi_v = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = (lo_v / width).floor() * width;
        let bins = (((hi_v - lo) / width).floor() as usize + 1).max(1);
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        Ok(Self::fill(costs, edges))
    }

    fn fill(costs: &[f64], edges: Vec<f64>) -> Self {
        let bins = edges.len() - 1;
        let lo = edges[0];
        let hi = edges[bins];
        let mut counts = vec![0u64; bins];
        for &c in costs {
            let f = (c - lo) / (hi - lo) * bins as f64;
            let mut i = (f.floor().max(0.0) as usize).min(bins - 1);
            // guard against rounding across an edge
            while i > 0 && c < edges[i] {
                i -= 1;
            }
            while i + 1 < bins && c >= edges[i + 1] {
                i += 1;
            }
            counts[i] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}
