//! Informativeness scores and top-k batch selection.

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::metrics::macro_f1;
use crate::error::{Error, Result};
use crate::learners::{argmax, fit, predict, ModelConfig, TrainedModel};
use crate::seeds::{derive_seed, rng_for, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Random,
    Uncertainty,
    Qbc,
    Emc,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::Uncertainty => "uncertainty",
            StrategyKind::Qbc => "qbc",
            StrategyKind::Emc => "emc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeMetric {
    MacroF1,
}

/// Which labelled data expected-model-change evaluates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmcEvaluation {
    /// The current labelled set.
    Labeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub committee_size: usize,
    pub emc_candidate_cap: usize,
    pub metric: ChangeMetric,
    pub emc_evaluation: EmcEvaluation,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            committee_size: 5,
            emc_candidate_cap: 100,
            metric: ChangeMetric::MacroF1,
            emc_evaluation: EmcEvaluation::Labeled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == StrategyKind::Qbc && self.committee_size < 2 {
            return Err(Error::InvalidConfig("committee_size must be >= 2".into()));
        }
        if self.kind == StrategyKind::Emc && self.emc_candidate_cap == 0 {
            return Err(Error::InvalidConfig("emc_candidate_cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// Pool instances with scores (higher is more informative) and the
/// current model's predicted class.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPool {
    pub indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub predicted: Vec<usize>,
}

impl ScoredPool {
    pub fn new(indices: Vec<usize>, scores: Vec<f64>, predicted: Vec<usize>) -> Result<Self> {
        if indices.len() != scores.len() || indices.len() != predicted.len() {
            return Err(Error::SchemaMismatch(format!(
                "scored pool lengths differ: {} indices, {} scores, {} predictions",
                indices.len(),
                scores.len(),
                predicted.len()
            )));
        }
        if scores.iter().any(|s| s.is_nan()) {
            return Err(Error::InvalidConfig("NaN score in pool".into()));
        }
        Ok(Self {
            indices,
            scores,
            predicted,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Positions ordered by descending score, ties by lower pool index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            self.scores[b]
                .total_cmp(&self.scores[a])
                .then(self.indices[a].cmp(&self.indices[b]))
        });
        order
    }
}

/// `1 − max_k p[i, k]` per row, with the argmax class.
pub fn score_least_confidence(probas: ArrayView2<'_, f64>) -> Result<(Vec<f64>, Vec<usize>)> {
    if probas.nrows() == 0 || probas.ncols() == 0 {
        return Err(Error::Empty("empty probability matrix"));
    }
    let mut scores = Vec::with_capacity(probas.nrows());
    let mut classes = Vec::with_capacity(probas.nrows());
    for row in probas.axis_iter(Axis(0)) {
        if (row.sum() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidConfig(format!(
                "probability row sums to {}",
                row.sum()
            )));
        }
        let c = argmax(row.iter().copied());
        scores.push(1.0 - row[c]);
        classes.push(c);
    }
    Ok((scores, classes))
}

/// Committee predictions: one column per member.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeVotes {
    pub votes: Array2<usize>,
    pub n_classes: usize,
}

impl CommitteeVotes {
    pub fn committee_size(&self) -> usize {
        self.votes.ncols()
    }

    /// V(y) for each class at instance `i`.
    pub fn counts(&self, i: usize) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &v in self.votes.row(i) {
            counts[v] += 1;
        }
        counts
    }

    /// Most-voted class per instance, ties to the lowest ordinal.
    pub fn majority(&self) -> Vec<usize> {
        (0..self.votes.nrows())
            .map(|i| argmax(self.counts(i).into_iter().map(|c| c as f64)))
            .collect()
    }
}

/// Bagged committee: member `m` is fit on a bootstrap resample drawn from
/// the stream `(seed, m)`.
pub fn build_committee(
    x_lab: ArrayView2<'_, f64>,
    y_lab: &[usize],
    n_classes: usize,
    base: &ModelConfig,
    committee_size: usize,
    seed: u64,
) -> Result<Vec<TrainedModel>> {
    if committee_size < 2 {
        return Err(Error::InvalidConfig("committee needs at least 2 members".into()));
    }
    let n = y_lab.len();
    if n < 2 {
        return Err(Error::InvalidConfig("committee needs at least 2 labelled instances".into()));
    }
    let root = derive_seed(seed, stream::COMMITTEE);
    (0..committee_size)
        .into_par_iter()
        .map(|m| {
            let mut rng = rng_for(root, m as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let xs = x_lab.select(Axis(0), &rows);
            let ys: Vec<usize> = rows.iter().map(|&r| y_lab[r]).collect();
            fit(xs.view(), &ys, n_classes, base, derive_seed(root, 1000 + m as u64))
        })
        .collect()
}

pub fn committee_votes(models: &[TrainedModel], x: ArrayView2<'_, f64>) -> Result<CommitteeVotes> {
    let first = models.first().ok_or(Error::Empty("empty committee"))?;
    let mut votes = Array2::<usize>::zeros((x.nrows(), models.len()));
    for (m, model) in models.iter().enumerate() {
        let pred = predict(model, x)?;
        votes.column_mut(m).assign(&Array1::from(pred));
    }
    Ok(CommitteeVotes {
        votes,
        n_classes: first.n_classes(),
    })
}

/// Per-instance vote entropy `−Σ (V/C) ln(V/C)` over labels with votes.
pub fn score_vote_entropy(votes: &CommitteeVotes) -> Result<Vec<f64>> {
    let c = votes.committee_size();
    if c == 0 {
        return Err(Error::InvalidConfig("committee size is zero".into()));
    }
    if votes.votes.nrows() == 0 {
        return Err(Error::Empty("no committee votes"));
    }
    let c = c as f64;
    Ok((0..votes.votes.nrows())
        .map(|i| {
            -votes
                .counts(i)
                .into_iter()
                .filter(|&v| v > 0)
                .map(|v| {
                    let p = v as f64 / c;
                    p * p.ln()
                })
                .sum::<f64>()
        })
        .collect())
}

fn metric(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<f64> {
    Ok(macro_f1(y_true, y_pred, k)?.macro_f1)
}

/// Best-case metric gain from adding each candidate with any label.
///
/// At most `cfg.emc_candidate_cap` candidates are scored, picked uniformly
/// at random; the rest get `−∞`. Every retrain uses the same fit seed so a
/// candidate's score does not depend on which others were picked.
#[allow(clippy::too_many_arguments)]
pub fn score_expected_model_change(
    cand_x: ArrayView2<'_, f64>,
    x_lab: ArrayView2<'_, f64>,
    y_lab: &[usize],
    n_classes: usize,
    base: &ModelConfig,
    cfg: &StrategyConfig,
    eval_x: ArrayView2<'_, f64>,
    eval_y: &[usize],
    seed: u64,
) -> Result<Vec<f64>> {
    let n_cand = cand_x.nrows();
    if n_cand == 0 {
        return Err(Error::Empty("no EMC candidates"));
    }
    if y_lab.is_empty() {
        return Err(Error::Empty("EMC needs a labelled set"));
    }
    if cfg.emc_candidate_cap == 0 {
        return Err(Error::InvalidConfig("emc_candidate_cap must be >= 1".into()));
    }
    let fit_seed = derive_seed(seed, stream::EMC_FIT);
    let baseline_model = fit(x_lab, y_lab, n_classes, base, fit_seed)?;
    let baseline = metric(eval_y, &predict(&baseline_model, eval_x)?, n_classes)?;

    let chosen: Vec<usize> = if n_cand > cfg.emc_candidate_cap {
        let mut rng = rng_for(seed, stream::EMC_CANDIDATES);
        let mut picked = sample(&mut rng, n_cand, cfg.emc_candidate_cap).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..n_cand).collect()
    };

    let mut y_aug = y_lab.to_vec();
    y_aug.push(0);
    let gains: Vec<(usize, f64)> = chosen
        .par_iter()
        .map(|&j| -> Result<(usize, f64)> {
            let x_aug = concatenate(Axis(0), &[x_lab, cand_x.slice(ndarray::s![j..j + 1, ..])])
                .expect("matching column counts");
            let mut y_aug = y_aug.clone();
            let mut best = f64::NEG_INFINITY;
            for label in 0..n_classes {
                *y_aug.last_mut().expect("non-empty") = label;
                let m = fit(x_aug.view(), &y_aug, n_classes, base, fit_seed)?;
                let score = metric(eval_y, &predict(&m, eval_x)?, n_classes)?;
                best = best.max(score - baseline);
            }
            Ok((j, best))
        })
        .collect::<Result<_>>()?;

    let mut scores = vec![f64::NEG_INFINITY; n_cand];
    for (j, g) in gains {
        scores[j] = g;
    }
    Ok(scores)
}

/// Uniform scores from the seeded generator, for the random baseline.
pub fn random_scores(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, stream::RANDOM_SCORES);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// The `min(batch, |pool|)` best-scored pool indices.
pub fn select_batch(sp: &ScoredPool, batch: usize) -> Result<Vec<usize>> {
    if sp.is_empty() {
        return Err(Error::Empty("empty pool"));
    }
    if batch == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    Ok(sp
        .ranking()
        .into_iter()
        .take(batch)
        .map(|p| sp.indices[p])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn pool(scores: Vec<f64>) -> ScoredPool {
        let n = scores.len();
        ScoredPool::new((0..n).collect(), scores, vec![0; n]).unwrap()
    }

    #[test]
    fn least_confidence_examples() {
        let third = 1.0 / 3.0;
        let p = array![[1.0, 0.0, 0.0], [0.5, 0.3, 0.2], [third, third, third]];
        let (s, c) = score_least_confidence(p.view()).unwrap();
        assert_eq!(s[0], 0.0);
        assert_abs_diff_eq!(s[1], 0.5);
        assert_abs_diff_eq!(s[2], 1.0 - 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(c, vec![0, 0, 0]);
        let uniform = Array2::from_elem((1, 4), 0.25);
        assert_abs_diff_eq!(score_least_confidence(uniform.view()).unwrap().0[0], 0.75);
    }

    #[test]
    fn least_confidence_rejects_empty_and_unnormalised() {
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(score_least_confidence(empty.view()).is_err());
        assert!(score_least_confidence(array![[0.5, 0.4]].view()).is_err());
    }

    fn votes(rows: Vec<Vec<usize>>, k: usize) -> CommitteeVotes {
        let c = rows[0].len();
        let flat: Vec<usize> = rows.concat();
        CommitteeVotes {
            votes: Array2::from_shape_vec((flat.len() / c, c), flat).unwrap(),
            n_classes: k,
        }
    }

    #[test]
    fn vote_entropy_examples() {
        let v = votes(vec![vec![1, 1, 1, 1, 1], vec![0, 0, 0, 1, 1], vec![0, 1, 2, 3, 3]], 4);
        let s = score_vote_entropy(&v).unwrap();
        assert_eq!(s[0], 0.0);
        assert_abs_diff_eq!(s[1], 0.67301, epsilon = 1e-5);
        let v = votes(vec![vec![0, 1, 2, 3]], 4);
        assert_abs_diff_eq!(score_vote_entropy(&v).unwrap()[0], 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(4f64.ln(), 1.38629, epsilon = 1e-5);
    }

    #[test]
    fn vote_entropy_zero_committee() {
        let v = CommitteeVotes {
            votes: Array2::zeros((3, 0)),
            n_classes: 2,
        };
        assert!(score_vote_entropy(&v).is_err());
    }

    #[test]
    fn committee_cardinality_and_determinism() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = [0, 0, 0, 1, 1, 1];
        let cfg = ModelConfig::decision_tree();
        let a = build_committee(x.view(), &y, 2, &cfg, 5, 1415).unwrap();
        let b = build_committee(x.view(), &y, 2, &cfg, 5, 1415).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(a, b);
        assert!(build_committee(x.view(), &y, 2, &cfg, 1, 1415).is_err());
    }

    #[test]
    fn committee_on_two_points_tolerates_single_class_resamples() {
        // Bootstraps of {a, b}: aa, ab, ba, bb; half are single-class.
        let x = array![[0.0], [1.0]];
        let y = [0, 1];
        let models = build_committee(x.view(), &y, 2, &ModelConfig::decision_tree(), 3, 9265).unwrap();
        assert_eq!(models.len(), 3);
        let v = committee_votes(&models, x.view()).unwrap();
        assert_eq!(v.votes.dim(), (2, 3));
    }

    #[test]
    fn select_batch_examples() {
        assert_eq!(select_batch(&pool(vec![0.9, 0.1, 0.5]), 2).unwrap(), vec![0, 2]);
        assert_eq!(select_batch(&pool(vec![0.3; 4]), 2).unwrap(), vec![0, 1]);
        assert_eq!(select_batch(&pool(vec![0.1, 0.2, 0.3]), 10).unwrap().len(), 3);
        assert!(select_batch(&pool(vec![]), 1).is_err());
    }

    #[test]
    fn unscored_candidates_rank_last() {
        let sp = pool(vec![f64::NEG_INFINITY, -0.5, f64::NEG_INFINITY, 0.0]);
        assert_eq!(select_batch(&sp, 3).unwrap(), vec![3, 1, 0]);
    }

    #[test]
    fn emc_with_perfect_baseline_is_non_positive() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 1, 1];
        let cand = array![[0.5], [2.5], [1.5]];
        let cfg = StrategyConfig::new(StrategyKind::Emc);
        let s = score_expected_model_change(
            cand.view(),
            x.view(),
            &y,
            2,
            &ModelConfig::decision_tree(),
            &cfg,
            x.view(),
            &y,
            1,
        )
        .unwrap();
        assert!(s.iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn emc_cap_leaves_overflow_unscored() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 1, 1];
        let cand = Array2::from_shape_fn((10, 1), |(i, _)| i as f64 * 0.3);
        let cfg = StrategyConfig {
            emc_candidate_cap: 3,
            ..StrategyConfig::new(StrategyKind::Emc)
        };
        let s = score_expected_model_change(
            cand.view(),
            x.view(),
            &y,
            2,
            &ModelConfig::decision_tree(),
            &cfg,
            x.view(),
            &y,
            4,
        )
        .unwrap();
        assert_eq!(s.iter().filter(|v| v.is_finite()).count(), 3);
        assert!(score_expected_model_change(
            Array2::<f64>::zeros((0, 1)).view(),
            x.view(),
            &y,
            2,
            &ModelConfig::decision_tree(),
            &cfg,
            x.view(),
            &y,
            4
        )
        .is_err());
    }

    #[test]
    fn random_scores_are_seeded() {
        assert_eq!(random_scores(20, 3), random_scores(20, 3));
        assert_ne!(random_scores(20, 3), random_scores(20, 4));
    }

    proptest! {
        #[test]
        fn select_batch_is_rank_invariant(
            scores in prop::collection::vec(-10.0f64..10.0, 1..60),
            batch in 1usize..20,
            a in 0.1f64..5.0,
            b in -3.0f64..3.0,
        ) {
            let plain = select_batch(&pool(scores.clone()), batch).unwrap();
            let affine = select_batch(&pool(scores.iter().map(|s| a * s + b).collect()), batch).unwrap();
            let cubed = select_batch(&pool(scores.iter().map(|s| s.powi(3) + s).collect()), batch).unwrap();
            prop_assert_eq!(&plain, &affine);
            prop_assert_eq!(&plain, &cubed);
        }
    }
}
