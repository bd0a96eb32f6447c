//! Paired Wilcoxon signed-rank test and Bonferroni correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the null distribution is
/// computed exactly.
pub const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    Exact,
    Normal,
    /// Every difference was zero; p is reported as 1.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs left after discarding zero differences.
    pub n_used: usize,
    /// Two-sided.
    pub p_value: f64,
    pub method: PMethod,
}

/// Average ranks (1-based) of `values` in ascending order; exact ties share
/// the mean of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided signed-rank test on the paired differences `x - y`.
///
/// Zero differences are dropped. Up to [`EXACT_LIMIT`] remaining pairs the
/// p-value is exact: the count of sign assignments with `W+ <= W` is obtained
/// by a subset-sum recurrence over doubled ranks, which is the full
/// enumeration of all `2^m` assignments without materialising them. Above the
/// limit a tie-corrected normal approximation with continuity correction is
/// used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            predictions: x.len(),
            instances: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|&d| d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n_used: 0,
            p_value: 1.0,
            method: PMethod::Degenerate,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (m * (m + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let (p_value, method) = if m <= EXACT_LIMIT {
        (exact_p(&ranks, statistic), PMethod::Exact)
    } else {
        (normal_p(&magnitudes, statistic, m), PMethod::Normal)
    };
    Ok(WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n_used: m,
        p_value,
        method,
    })
}

fn exact_p(ranks: &[f64], statistic: f64) -> f64 {
    // Doubled ranks are integers even for half-integer tie ranks.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max_sum + 1];
    counts[0] = 1;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (statistic * 2.0).round() as usize;
    let at_most: u64 = counts[..=limit.min(max_sum)].iter().sum();
    let assignments = 2f64.powi(ranks.len() as i32);
    (2.0 * at_most as f64 / assignments).min(1.0)
}

fn normal_p(magnitudes: &[f64], statistic: f64, m: usize) -> f64 {
    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let variance = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term / 48.0;
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Multiplies every p-value by the number of comparisons, capped at 1.
pub fn bonferroni(p_values: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidPValue(bad));
    }
    let m = p_values.len() as f64;
    Ok(p_values.iter().map(|p| (p * m).min(1.0)).collect())
}
