//! Stratified train/test splitting.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seeds::{rng_for, stream};
use crate::types::{bincount, FeatureDataset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Distributes `total` units over `shares` by floor plus largest remainder.
///
/// Remainder ties go to the lower index. `shares` are the exact fractional
/// targets and should sum to `total` (up to rounding).
pub fn largest_remainder(shares: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = shares.iter().map(|s| s.max(0.0).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(total.saturating_sub(assigned)) {
        counts[c] += 1;
    }
    counts
}

/// Per-class test counts for a stratified split.
pub fn stratified_test_counts(class_counts: &[usize], test_fraction: f64) -> Vec<usize> {
    let n: usize = class_counts.iter().sum();
    let shares: Vec<f64> = class_counts
        .iter()
        .map(|&c| c as f64 * test_fraction)
        .collect();
    let total = (n as f64 * test_fraction).round() as usize;
    largest_remainder(&shares, total)
}

pub fn stratified_split(ds: &FeatureDataset, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    split_labels(&ds.labels, ds.n_classes(), test_fraction, seed)
}

/// Stratified split over a bare label vector.
pub fn split_labels(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let counts = bincount(labels, n_classes);
    if let Some((class, &count)) = counts.iter().enumerate().find(|(_, &c)| c > 0 && c < 2) {
        return Err(Error::ClassTooSmall { class, count });
    }
    let test_counts = stratified_test_counts(&counts, test_fraction);

    let mut rng = rng_for(seed, stream::SPLIT);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for (class, &n_test) in test_counts.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}
