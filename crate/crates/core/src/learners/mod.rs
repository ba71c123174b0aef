//! Probabilistic tree classifiers: CART, random forest, extra trees and
//! softmax gradient boosting.

mod boost;
pub mod tree;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::{derive_seed, rng_for, stream};
pub use boost::Boosted;
use tree::{ClassTree, FeatureSampling, GrowParams, ThresholdRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoosted,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::ExtraTrees => "extra_trees",
            ModelKind::GradientBoosted => "gradient_boosted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    Gini,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    All,
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub split_criterion: SplitCriterion,
    pub min_samples_split: usize,
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub learning_rate: f64,
    pub max_features: MaxFeatures,
    /// Bootstrap resampling per member; forests only.
    pub bootstrap: bool,
}

impl ModelConfig {
    pub fn decision_tree() -> Self {
        Self {
            kind: ModelKind::DecisionTree,
            split_criterion: SplitCriterion::Gini,
            min_samples_split: 2,
            n_estimators: 1,
            max_depth: None,
            learning_rate: 1.0,
            max_features: MaxFeatures::All,
            bootstrap: false,
        }
    }

    pub fn random_forest() -> Self {
        Self {
            kind: ModelKind::RandomForest,
            n_estimators: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            ..Self::decision_tree()
        }
    }

    pub fn extra_trees() -> Self {
        Self {
            kind: ModelKind::ExtraTrees,
            n_estimators: 100,
            max_features: MaxFeatures::All,
            bootstrap: false,
            ..Self::decision_tree()
        }
    }

    /// lr 0.3, depth 6, 100 rounds.
    pub fn xgb_like() -> Self {
        Self {
            kind: ModelKind::GradientBoosted,
            n_estimators: 100,
            max_depth: Some(6),
            learning_rate: 0.3,
            ..Self::decision_tree()
        }
    }

    /// lr 0.1, depth 3, 100 rounds.
    pub fn gb_like() -> Self {
        Self {
            learning_rate: 0.1,
            max_depth: Some(3),
            ..Self::xgb_like()
        }
    }

    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::DecisionTree => Self::decision_tree(),
            ModelKind::RandomForest => Self::random_forest(),
            ModelKind::ExtraTrees => Self::extra_trees(),
            ModelKind::GradientBoosted => Self::xgb_like(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be >= 2".into()));
        }
        if self.n_estimators == 0 {
            return Err(Error::InvalidConfig("n_estimators must be >= 1".into()));
        }
        if self.kind == ModelKind::GradientBoosted
            && !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
        {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Fitted {
    /// Every input maps to a single class.
    Constant(usize),
    Forest(Vec<ClassTree>),
    Boosted(Boosted),
}

/// A fitted classifier; immutable after [`fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    n_classes: usize,
    n_features: usize,
    fitted: Fitted,
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Member trees of a tree or forest model.
    pub fn trees(&self) -> &[ClassTree] {
        match &self.fitted {
            Fitted::Forest(trees) => trees,
            _ => &[],
        }
    }
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample);
    }
    Ok(())
}

/// Fits a model; deterministic for fixed inputs and seed.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    n_classes: usize,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<TrainedModel> {
    cfg.validate()?;
    let (n, d) = x.dim();
    if n != y.len() {
        return Err(Error::SchemaMismatch(format!("{n} rows but {} labels", y.len())));
    }
    if n == 0 {
        return Err(Error::Empty("no training instances"));
    }
    if d == 0 {
        return Err(Error::Empty("no features"));
    }
    if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    check_finite(x)?;
    let first = y[0];
    let fitted = if y.iter().all(|&l| l == first) {
        Fitted::Constant(first)
    } else {
        match cfg.kind {
            ModelKind::GradientBoosted => Fitted::Boosted(boost::fit(x, y, n_classes, cfg)),
            _ => Fitted::Forest(fit_forest(x, y, n_classes, cfg, seed)),
        }
    };
    Ok(TrainedModel {
        n_classes,
        n_features: d,
        fitted,
    })
}

fn fit_forest(x: ArrayView2<'_, f64>, y: &[usize], k: usize, cfg: &ModelConfig, seed: u64) -> Vec<ClassTree> {
    let n = y.len();
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_samples_split: cfg.min_samples_split,
        features: match cfg.max_features {
            MaxFeatures::All => FeatureSampling::All,
            MaxFeatures::Sqrt => FeatureSampling::Sqrt,
        },
        thresholds: match cfg.kind {
            ModelKind::ExtraTrees => ThresholdRule::Random,
            _ => ThresholdRule::Best,
        },
    };
    let members = match cfg.kind {
        ModelKind::DecisionTree => 1,
        _ => cfg.n_estimators,
    };
    let bootstrap = cfg.bootstrap && cfg.kind != ModelKind::DecisionTree;
    (0..members)
        .into_par_iter()
        .map(|m| {
            let mut rng = rng_for(derive_seed(seed, stream::ENSEMBLE_MEMBER), m as u64);
            let rows: Vec<usize> = if bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            tree::grow_class_tree(x, y, k, &rows, &params, &mut rng)
        })
        .collect()
}

/// Class probabilities, one row per input row; rows sum to 1.
pub fn predict_proba(m: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != m.n_features {
        return Err(Error::DimensionMismatch {
            expected: m.n_features,
            got: x.ncols(),
        });
    }
    let k = m.n_classes;
    let mut out = Array2::<f64>::zeros((x.nrows(), k));
    match &m.fitted {
        Fitted::Constant(c) => out.column_mut(*c).fill(1.0),
        Fitted::Forest(trees) => {
            let scale = 1.0 / trees.len() as f64;
            out.axis_iter_mut(Axis(0))
                .into_par_iter()
                .zip(x.axis_iter(Axis(0)).into_par_iter())
                .for_each(|(mut dst, row)| {
                    let row = row.to_vec();
                    for t in trees {
                        for (o, p) in dst.iter_mut().zip(t.leaf_for(&row)) {
                            *o += p;
                        }
                    }
                    dst.mapv_inplace(|v| v * scale);
                });
        }
        Fitted::Boosted(b) => b.predict_proba_into(x, &mut out),
    }
    Ok(out)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in row.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn predict(m: &TrainedModel, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
    Ok(predict_proba(m, x)?
        .axis_iter(Axis(0))
        .map(|r| argmax(r.iter().copied()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<ModelConfig> {
        vec![
            ModelConfig::decision_tree(),
            ModelConfig::random_forest(),
            ModelConfig::extra_trees(),
            ModelConfig::xgb_like(),
            ModelConfig::gb_like(),
        ]
    }

    fn noisy(n: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, 4), |_| rng.random::<f64>());
        let y = (0..n)
            .map(|i| usize::from(x[[i, 0]] + 0.3 * rng.random::<f64>() > 0.6) + usize::from(x[[i, 1]] > 0.7))
            .collect();
        (x, y)
    }

    #[test]
    fn presets_mirror_reference_table() {
        let dt = ModelConfig::decision_tree();
        assert_eq!((dt.min_samples_split, dt.max_depth), (2, None));
        assert_eq!(ModelConfig::random_forest().n_estimators, 100);
        assert_eq!(ModelConfig::extra_trees().n_estimators, 100);
        let xgb = ModelConfig::xgb_like();
        assert_eq!((xgb.learning_rate, xgb.max_depth, xgb.n_estimators), (0.3, Some(6), 100));
        let gb = ModelConfig::gb_like();
        assert_eq!((gb.learning_rate, gb.max_depth, gb.n_estimators), (0.1, Some(3), 100));
    }

    #[test]
    fn single_class_is_one_hot() {
        let x = array![[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]];
        for cfg in all_kinds() {
            let m = fit(x.view(), &[2, 2, 2], 3, &cfg, 1).unwrap();
            let p = predict_proba(&m, array![[9.0, -9.0], [0.0, 0.0]].view()).unwrap();
            assert_eq!(p, array![[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]);
        }
    }

    #[test]
    fn rows_sum_to_one_and_are_non_negative() {
        let (x, y) = noisy(150, 7);
        let (probe, _) = noisy(2000, 8);
        for cfg in all_kinds() {
            let m = fit(x.view(), &y, 3, &cfg, 11).unwrap();
            let p = predict_proba(&m, probe.view()).unwrap();
            for row in p.axis_iter(Axis(0)) {
                assert!((row.sum() - 1.0).abs() <= 1e-9, "{:?} {}", cfg.kind, row.sum());
                assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = noisy(120, 1);
        for cfg in all_kinds() {
            let a = fit(x.view(), &y, 3, &cfg, 42).unwrap();
            let b = fit(x.view(), &y, 3, &cfg, 42).unwrap();
            assert_eq!(a, b);
            let pa = predict_proba(&a, x.view()).unwrap();
            let pb = predict_proba(&b, x.view()).unwrap();
            assert!(pa.iter().zip(pb.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn decision_tree_fits_training_set() {
        let (x, y) = noisy(300, 2);
        let m = fit(x.view(), &y, 3, &ModelConfig::decision_tree(), 0).unwrap();
        assert_eq!(predict(&m, x.view()).unwrap(), y);
    }

    #[test]
    fn single_member_forest_equals_its_tree() {
        let (x, y) = noisy(80, 3);
        let cfg = ModelConfig {
            n_estimators: 1,
            ..ModelConfig::extra_trees()
        };
        let m = fit(x.view(), &y, 3, &cfg, 9).unwrap();
        let tree = &m.trees()[0];
        let p = predict_proba(&m, x.view()).unwrap();
        for (i, row) in x.axis_iter(Axis(0)).enumerate() {
            let leaf = tree.leaf_for(row.as_slice().unwrap());
            assert_eq!(p.row(i).to_vec(), *leaf);
        }
    }

    #[test]
    fn nan_rejected() {
        let x = array![[0.0], [f64::NAN]];
        assert_eq!(
            fit(x.view(), &[0, 1], 2, &ModelConfig::decision_tree(), 0),
            Err(Error::NonFiniteSample)
        );
    }

    #[test]
    fn dimension_mismatch() {
        let x = array![[0.0], [1.0]];
        let m = fit(x.view(), &[0, 1], 2, &ModelConfig::decision_tree(), 0).unwrap();
        assert!(matches!(
            predict_proba(&m, array![[0.0, 1.0]].view()),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax([0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax([0.5, 0.5]), 0);
        assert_eq!(argmax([0.0, 0.0, 1.0]), 2);
    }
}
