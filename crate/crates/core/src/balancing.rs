//! Inverted class-frequency balancing of query batches.
//!
//! The class with the k-th smallest share of the labelled set is given the
//! k-th largest share of the next batch. Shares become integer quotas by
//! largest remainder, and quotas are filled from the pool using the current
//! model's predicted classes (true labels of pool instances are unknown).

use crate::error::{Error, Result};
use crate::split::largest_remainder;
use crate::strategies::ScoredPool;
use crate::types::bincount;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassFrequency {
    pub freq: Vec<usize>,
    pub norm_freq: Vec<f64>,
}

pub fn class_frequency(labels: &[usize], n_classes: usize) -> Result<ClassFrequency> {
    if labels.is_empty() {
        return Err(Error::Empty("no labels to count"));
    }
    if n_classes == 0 {
        return Err(Error::InvalidConfig("label space is empty".into()));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    let freq = bincount(labels, n_classes);
    let total = labels.len() as f64;
    let norm_freq = freq.iter().map(|&c| c as f64 / total).collect();
    Ok(ClassFrequency { freq, norm_freq })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedFrequency {
    pub inverted_freq: Vec<f64>,
}

/// Rank-reversal map: entry with ascending rank r takes the r-th largest
/// value. Ties in rank resolve by lower index.
pub fn invert_distribution(norm_freq: &[f64]) -> Vec<f64> {
    let mut ascending: Vec<usize> = (0..norm_freq.len()).collect();
    ascending.sort_by(|&a, &b| norm_freq[a].total_cmp(&norm_freq[b]).then(a.cmp(&b)));
    let mut descending = norm_freq.to_vec();
    descending.sort_by(|a, b| b.total_cmp(a));
    let mut inverted = vec![0.0; norm_freq.len()];
    for (rank, &class) in ascending.iter().enumerate() {
        inverted[class] = descending[rank];
    }
    inverted
}

pub fn inverted_frequency(current_train_y: &[usize], n_classes: usize) -> Result<InvertedFrequency> {
    let freq = class_frequency(current_train_y, n_classes)?;
    Ok(InvertedFrequency {
        inverted_freq: invert_distribution(&freq.norm_freq),
    })
}

/// Per-class targets for one batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotaPlan {
    pub quotas: Vec<usize>,
}

impl QuotaPlan {
    pub fn total(&self) -> usize {
        self.quotas.iter().sum()
    }
}

pub fn allocate_quotas(inv: &InvertedFrequency, batch: usize) -> Result<QuotaPlan> {
    if batch == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    let shares: Vec<f64> = inv.inverted_freq.iter().map(|f| f * batch as f64).collect();
    Ok(QuotaPlan {
        quotas: largest_remainder(&shares, batch),
    })
}

/// Top-scored instances per predicted class up to each quota; unfilled
/// quota is backfilled from the rest of the pool in global score order.
pub fn balanced_select(sp: &ScoredPool, quotas: &QuotaPlan) -> Result<Vec<usize>> {
    if sp.is_empty() {
        return Err(Error::Empty("empty pool"));
    }
    let ranking = sp.ranking();
    let mut taken = vec![false; sp.len()];
    let mut selected = Vec::with_capacity(quotas.total().min(sp.len()));
    for (class, &quota) in quotas.quotas.iter().enumerate() {
        for &p in ranking
            .iter()
            .filter(|&&p| sp.predicted[p] == class)
            .take(quota)
        {
            taken[p] = true;
            selected.push(sp.indices[p]);
        }
    }
    let target = quotas.total().min(sp.len());
    let shortfall = target - selected.len();
    for &p in ranking.iter().filter(|&&p| !taken[p]).take(shortfall) {
        selected.push(sp.indices[p]);
    }
    Ok(selected)
}
