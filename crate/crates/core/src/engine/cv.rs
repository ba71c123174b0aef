//! Repeated stratified k-fold baseline on the full dataset.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::macro_f1;
use crate::error::{Error, Result};
use crate::featurize::fit_scaler;
use crate::learners::{fit, predict, ModelConfig};
use crate::seeds::{derive_seed, rng_for, stream};
use crate::types::FeatureDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean: f64,
    /// sample standard deviation over all fold scores
    pub std: f64,
    pub fold_scores: Vec<f64>,
}

/// Fold id per instance. Members of each class are shuffled and dealt
/// round-robin, continuing the rotation across classes so fold sizes stay
/// within one of each other.
pub fn stratified_folds(labels: &[usize], n_classes: usize, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::InvalidConfig("need at least 2 folds".into()));
    }
    let mut rng = rng_for(seed, stream::CV);
    let mut assignment = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if !members.is_empty() && members.len() < folds {
            return Err(Error::ClassTooSmall {
                class,
                count: members.len(),
            });
        }
        members.shuffle(&mut rng);
        for m in members {
            assignment[m] = next % folds;
            next += 1;
        }
    }
    Ok(assignment)
}

pub fn cv_baseline(
    ds: &FeatureDataset,
    model: &ModelConfig,
    folds: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("need at least 1 repeat".into()));
    }
    let k = ds.n_classes();
    let root = derive_seed(seed, stream::CV);
    let mut fold_scores = Vec::with_capacity(folds * repeats);
    for r in 0..repeats {
        let assignment = stratified_folds(&ds.labels, k, folds, derive_seed(root, r as u64))?;
        for f in 0..folds {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assignment[i] == f);
            let train_ds = ds.subset(&train);
            let test_ds = ds.subset(&test);
            let scaler = fit_scaler(&train_ds.instances)?;
            let xtr = scaler.apply(&train_ds.instances)?;
            let xte = scaler.apply(&test_ds.instances)?;
            let fit_seed = derive_seed(root, 1_000 + (r * folds + f) as u64);
            let m = fit(xtr.view(), &train_ds.labels, k, model, fit_seed)?;
            fold_scores.push(macro_f1(&test_ds.labels, &predict(&m, xte.view())?, k)?.macro_f1);
        }
    }
    let n = fold_scores.len() as f64;
    let mean = fold_scores.iter().sum::<f64>() / n;
    let std = if fold_scores.len() > 1 {
        (fold_scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CvReport {
        mean,
        std,
        fold_scores,
    })
}
