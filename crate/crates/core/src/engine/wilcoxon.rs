//! Paired Wilcoxon signed-rank test (two-sided).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest tie-free sample size that uses the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    /// min(W⁺, W⁻)
    pub statistic: f64,
    pub p_value: f64,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub method: TestMethod,
}

/// Average ranks (1-based) of `values`, plus the sizes of tied groups.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
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
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Number of sign assignments of ranks 1..=n per W⁺ value.
fn signed_rank_counts(n: usize) -> Vec<u64> {
    let total = n * (n + 1) / 2;
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for r in 1..=n {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<StatTestResult> {
    if a.len() != b.len() {
        return Err(Error::SchemaMismatch(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("no paired samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(StatTestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            method: TestMethod::Exact,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = w_plus.min(total - w_plus);

    if n <= EXACT_MAX_N && ties.is_empty() {
        let counts = signed_rank_counts(n);
        // integer ranks without ties, so w is integral
        let w = w.round() as usize;
        let t = n * (n + 1) / 2;
        let extreme: u64 = counts
            .iter()
            .enumerate()
            .filter(|&(s, _)| s <= w || s >= t - w)
            .map(|(_, &c)| c)
            .sum();
        let p = extreme as f64 / (1u64 << n) as f64;
        return Ok(StatTestResult {
            statistic: w as f64,
            p_value: p.min(1.0),
            n_effective: n,
            method: TestMethod::Exact,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
        let normal = Normal::standard();
        (2.0 * normal.cdf(z)).min(1.0)
    };
    Ok(StatTestResult {
        statistic: w,
        p_value: p,
        n_effective: n,
        method: TestMethod::NormalApprox,
    })
}
