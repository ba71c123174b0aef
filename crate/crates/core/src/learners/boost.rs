//! Multiclass gradient boosting on the softmax (multinomial deviance) loss.
//!
//! Each round fits one least-squares regression tree per class to the
//! negative gradient `onehot − p` and sets leaf values by a single Newton
//! step. Initial scores are zero for every class; no shrinkage beyond the
//! learning rate, no L1/L2 leaf penalty.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_regression_tree, presort_all, RegressionTree};
use super::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boosted {
    n_classes: usize,
    learning_rate: f64,
    /// rounds × classes
    rounds: Vec<Vec<RegressionTree>>,
}

pub(crate) fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

pub(crate) fn fit(x: ArrayView2<'_, f64>, y: &[usize], k: usize, cfg: &ModelConfig) -> Boosted {
    let n = y.len();
    let presorted = presort_all(x);
    let mut scores = Array2::<f64>::zeros((n, k));
    let scale = (k as f64 - 1.0) / k as f64;
    let mut rounds = Vec::with_capacity(cfg.n_estimators);
    for _ in 0..cfg.n_estimators {
        let mut probs = scores.clone();
        for mut row in probs.axis_iter_mut(Axis(0)) {
            softmax_inplace(row.as_slice_mut().expect("contiguous row"));
        }
        let trees: Vec<RegressionTree> = (0..k)
            .into_par_iter()
            .map(|c| {
                let residual: Vec<f64> = (0..n)
                    .map(|i| f64::from(u8::from(y[i] == c)) - probs[[i, c]])
                    .collect();
                let hessian: Vec<f64> = (0..n).map(|i| probs[[i, c]] * (1.0 - probs[[i, c]])).collect();
                grow_regression_tree(
                    x,
                    &residual,
                    &hessian,
                    scale,
                    cfg.max_depth,
                    cfg.min_samples_split,
                    &presorted,
                )
            })
            .collect();
        for (i, row) in x.axis_iter(Axis(0)).enumerate() {
            let row = row.to_vec();
            for (c, t) in trees.iter().enumerate() {
                scores[[i, c]] += cfg.learning_rate * t.leaf_for(&row);
            }
        }
        rounds.push(trees);
    }
    Boosted {
        n_classes: k,
        learning_rate: cfg.learning_rate,
        rounds,
    }
}

impl Boosted {
    pub(crate) fn predict_proba_into(&self, x: ArrayView2<'_, f64>, out: &mut Array2<f64>) {
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(x.axis_iter(Axis(0)).into_par_iter())
            .for_each(|(mut dst, row)| {
                let row = row.to_vec();
                let slot = dst.as_slice_mut().expect("contiguous row");
                for trees in &self.rounds {
                    for (c, t) in trees.iter().enumerate() {
                        slot[c] += self.learning_rate * t.leaf_for(&row);
                    }
                }
                softmax_inplace(slot);
            });
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }
}
