//! The active-learning loop.
//!
//! [`ActiveLearner`] is a resumable state machine: it always holds exactly
//! one outstanding batch of pool instances until [`ActiveLearner::complete_batch`]
//! receives their labels, at which point it retrains from scratch, scores the
//! test split (when one exists) and issues the next batch. [`run_al_experiment`]
//! drives it with any [`Oracle`]; the annotation service drives it by hand.

pub mod cv;
pub mod metrics;
pub mod oracle;
pub mod summary;
pub mod wilcoxon;

use std::time::Instant;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::balancing::{allocate_quotas, balanced_select, inverted_frequency};
use crate::error::{Error, Result};
use crate::featurize::fit_scaler;
use crate::learners::{argmax, fit, predict, predict_proba, ModelConfig, TrainedModel};
use crate::seeds::{derive_seed, rng_for, stream};
use crate::split::{stratified_split, SplitIndices};
use crate::strategies::{
    build_committee, committee_votes, random_scores, score_expected_model_change,
    score_least_confidence, score_vote_entropy, select_batch, ScoredPool, StrategyConfig,
    StrategyKind,
};
use crate::types::{bincount, FeatureDataset};

pub use cv::{cv_baseline, CvReport};
pub use metrics::{macro_f1, F1Report};
pub use oracle::{DeferredOracle, Oracle, SimulatedOracle};
pub use summary::{summarize_runs, StepSummary};
pub use wilcoxon::{wilcoxon_signed_rank, StatTestResult, TestMethod};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: StrategyConfig,
    pub model: ModelConfig,
    pub balanced: bool,
    /// Maximum number of labelled instances.
    pub budget: usize,
    /// Instances labelled per iteration.
    pub step: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(strategy: StrategyConfig, model: ModelConfig, budget: usize, step: usize, seed: u64) -> Self {
        Self {
            strategy,
            model,
            balanced: false,
            budget,
            step,
            test_fraction: 0.2,
            seed,
        }
    }

    pub fn validate(&self, pool_size: usize) -> Result<()> {
        self.strategy.validate()?;
        self.model.validate()?;
        if self.step == 0 {
            return Err(Error::InvalidConfig("step must be >= 1".into()));
        }
        if self.step > self.budget {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds budget {}",
                self.step, self.budget
            )));
        }
        if self.budget > pool_size {
            return Err(Error::BudgetExceedsPool {
                budget: self.budget,
                pool: pool_size,
            });
        }
        if self.strategy.kind == StrategyKind::Qbc && self.step < 2 {
            return Err(Error::InvalidConfig(
                "query-by-committee needs step >= 2 to bag the first batch".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub labeled_count: usize,
    /// Test-split macro-F1; absent when the run has no labelled holdout.
    pub macro_f1: Option<f64>,
    pub per_class_f1: Option<Vec<f64>>,
    pub labeled_class_counts: Vec<usize>,
    /// Dataset instance ids labelled in this step, in query order.
    pub queried: Vec<usize>,
    pub elapsed_ms: u64,
}

impl StepEntry {
    /// Equality on everything but wall-clock timing.
    pub fn same_trace(&self, other: &StepEntry) -> bool {
        StepEntry {
            elapsed_ms: 0,
            ..self.clone()
        } == StepEntry {
            elapsed_ms: 0,
            ..other.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub steps: Vec<StepEntry>,
}

impl RunRecord {
    pub fn same_trace(&self, other: &RunRecord) -> bool {
        self.seed == other.seed
            && self.steps.len() == other.steps.len()
            && self.steps.iter().zip(&other.steps).all(|(a, b)| a.same_trace(b))
    }
}

/// Labelled test data, used for evaluation only.
#[derive(Debug, Clone)]
pub struct Holdout {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
}

/// Scores for one outstanding batch item.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingItem {
    pub instance_id: usize,
    /// `None` for the random first batch.
    pub score: Option<f64>,
    pub predicted: Option<usize>,
    pub proba: Option<Vec<f64>>,
}

pub struct ActiveLearner {
    cfg: ExperimentConfig,
    n_classes: usize,
    /// scaled pool features, rows aligned with `pool_ids`
    pool_x: Array2<f64>,
    pool_ids: Vec<usize>,
    holdout: Option<Holdout>,
    labeled: Vec<usize>,
    labels: Vec<usize>,
    is_labeled: Vec<bool>,
    pending: Vec<PendingItem>,
    pending_pos: Vec<usize>,
    steps: Vec<StepEntry>,
    model: Option<TrainedModel>,
}

impl std::fmt::Debug for ActiveLearner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActiveLearner")
            .field("pool", &self.pool_ids.len())
            .field("labeled", &self.labeled.len())
            .field("pending", &self.pending_pos.len())
            .field("steps", &self.steps.len())
            .finish()
    }
}

impl ActiveLearner {
    /// Uses the train split as the pool and the test split as holdout.
    /// Only test labels are read from `ds`.
    pub fn from_split(ds: &FeatureDataset, split: &SplitIndices, cfg: ExperimentConfig) -> Result<Self> {
        let pool_raw = ds.instances.select(Axis(0), &split.train);
        let scaler = fit_scaler(&pool_raw)?;
        let holdout = Holdout {
            x: scaler.apply(&ds.instances.select(Axis(0), &split.test))?,
            y: split.test.iter().map(|&i| ds.labels[i]).collect(),
        };
        Self::new(
            scaler.apply(&pool_raw)?,
            split.train.clone(),
            ds.n_classes(),
            Some(holdout),
            cfg,
        )
    }

    /// Pool of already-scaled features; `pool_ids` name each row.
    pub fn new(
        pool_x: Array2<f64>,
        pool_ids: Vec<usize>,
        n_classes: usize,
        holdout: Option<Holdout>,
        cfg: ExperimentConfig,
    ) -> Result<Self> {
        if pool_x.nrows() != pool_ids.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} pool rows but {} ids",
                pool_x.nrows(),
                pool_ids.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::InvalidConfig("need at least 2 classes".into()));
        }
        cfg.validate(pool_ids.len())?;
        let n = pool_ids.len();
        let mut learner = Self {
            cfg,
            n_classes,
            pool_x,
            pool_ids,
            holdout,
            labeled: Vec::new(),
            labels: Vec::new(),
            is_labeled: vec![false; n],
            pending: Vec::new(),
            pending_pos: Vec::new(),
            steps: Vec::new(),
            model: None,
        };
        let mut rng: ChaCha8Rng = rng_for(cfg.seed, stream::FIRST_BATCH);
        let first = sample(&mut rng, n, cfg.step).into_vec();
        learner.set_pending(first, None);
        Ok(learner)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_finished(&self) -> bool {
        self.pending_pos.is_empty()
    }

    /// Instance ids of the outstanding batch, in query order.
    pub fn pending(&self) -> Vec<usize> {
        self.pending.iter().map(|p| p.instance_id).collect()
    }

    pub fn pending_items(&self) -> &[PendingItem] {
        &self.pending
    }

    pub fn steps(&self) -> &[StepEntry] {
        &self.steps
    }

    pub fn record(&self) -> RunRecord {
        RunRecord {
            seed: self.cfg.seed,
            steps: self.steps.clone(),
        }
    }

    /// (instance id, label) for every labelled instance, in label order.
    pub fn labeled(&self) -> Vec<(usize, usize)> {
        self.labeled
            .iter()
            .zip(&self.labels)
            .map(|(&p, &l)| (self.pool_ids[p], l))
            .collect()
    }

    pub fn pool_ids(&self) -> &[usize] {
        &self.pool_ids
    }

    /// Scaled feature row of a pool instance.
    pub fn pool_row(&self, instance_id: usize) -> Option<ArrayView1<'_, f64>> {
        self.pool_ids
            .iter()
            .position(|&id| id == instance_id)
            .map(|p| self.pool_x.row(p))
    }

    pub fn model(&self) -> Option<&TrainedModel> {
        self.model.as_ref()
    }

    pub fn labeled_class_counts(&self) -> Vec<usize> {
        bincount(&self.labels, self.n_classes)
    }

    fn set_pending(&mut self, positions: Vec<usize>, scored: Option<(&ScoredPool, &Array2<f64>)>) {
        self.pending = positions
            .iter()
            .map(|&p| {
                let (score, predicted, proba) = match scored {
                    Some((sp, probs)) => {
                        let at = sp.indices.binary_search(&p).expect("selected from pool");
                        (
                            Some(sp.scores[at]),
                            Some(sp.predicted[at]),
                            Some(probs.row(at).to_vec()),
                        )
                    }
                    None => (None, None, None),
                };
                PendingItem {
                    instance_id: self.pool_ids[p],
                    score,
                    predicted,
                    proba,
                }
            })
            .collect();
        self.pending_pos = positions;
    }

    /// Accepts labels for the outstanding batch (aligned with
    /// [`pending`](Self::pending)), retrains, evaluates and queues the next
    /// batch.
    pub fn complete_batch(&mut self, labels: &[usize]) -> Result<&StepEntry> {
        if self.is_finished() {
            return Err(Error::InvalidConfig("run already finished".into()));
        }
        if labels.len() != self.pending_pos.len() {
            return Err(Error::Oracle(format!(
                "expected {} labels, got {}",
                self.pending_pos.len(),
                labels.len()
            )));
        }
        for (item, &label) in self.pending.iter().zip(labels) {
            if label >= self.n_classes {
                return Err(Error::InvalidOracleLabel {
                    index: item.instance_id,
                    label,
                });
            }
        }
        let started = Instant::now();
        let iteration = self.steps.len() as u64;
        let queried = self.pending();
        for (&p, &label) in self.pending_pos.iter().zip(labels) {
            self.is_labeled[p] = true;
            self.labeled.push(p);
            self.labels.push(label);
        }
        self.pending.clear();
        self.pending_pos.clear();

        let x_lab = self.pool_x.select(Axis(0), &self.labeled);
        let model_seed = derive_seed(derive_seed(self.cfg.seed, stream::MODEL), iteration);
        let model = fit(x_lab.view(), &self.labels, self.n_classes, &self.cfg.model, model_seed)?;

        let (macro_f1, per_class_f1) = match &self.holdout {
            Some(h) => {
                let report = metrics::macro_f1(&h.y, &predict(&model, h.x.view())?, self.n_classes)?;
                (Some(report.macro_f1), Some(report.per_class))
            }
            None => (None, None),
        };

        let remaining_budget = self.cfg.budget.saturating_sub(self.labeled.len());
        if remaining_budget > 0 {
            let batch = remaining_budget.min(self.cfg.step);
            self.queue_next(&model, &x_lab, batch, iteration)?;
        }
        self.model = Some(model);
        self.steps.push(StepEntry {
            labeled_count: self.labeled.len(),
            macro_f1,
            per_class_f1,
            labeled_class_counts: self.labeled_class_counts(),
            queried,
            elapsed_ms: started.elapsed().as_millis() as u64,
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    fn queue_next(&mut self, model: &TrainedModel, x_lab: &Array2<f64>, batch: usize, iteration: u64) -> Result<()> {
        let remaining: Vec<usize> = (0..self.pool_ids.len()).filter(|&p| !self.is_labeled[p]).collect();
        if remaining.is_empty() {
            return Ok(());
        }
        let x_rem = self.pool_x.select(Axis(0), &remaining);
        let probs = predict_proba(model, x_rem.view())?;
        let predicted: Vec<usize> = probs.axis_iter(Axis(0)).map(|r| argmax(r.iter().copied())).collect();
        let step_seed = derive_seed(self.cfg.seed, 100 + iteration);
        let scores = match self.cfg.strategy.kind {
            StrategyKind::Random => random_scores(remaining.len(), step_seed),
            StrategyKind::Uncertainty => score_least_confidence(probs.view())?.0,
            StrategyKind::Qbc => {
                let committee = build_committee(
                    x_lab.view(),
                    &self.labels,
                    self.n_classes,
                    &self.cfg.model,
                    self.cfg.strategy.committee_size,
                    step_seed,
                )?;
                score_vote_entropy(&committee_votes(&committee, x_rem.view())?)?
            }
            StrategyKind::Emc => score_expected_model_change(
                x_rem.view(),
                x_lab.view(),
                &self.labels,
                self.n_classes,
                &self.cfg.model,
                &self.cfg.strategy,
                x_lab.view(),
                &self.labels,
                step_seed,
            )?,
        };
        let sp = ScoredPool::new(remaining, scores, predicted)?;
        let chosen = if self.cfg.balanced {
            let inv = inverted_frequency(&self.labels, self.n_classes)?;
            balanced_select(&sp, &allocate_quotas(&inv, batch)?)?
        } else {
            select_batch(&sp, batch)?
        };
        self.set_pending(chosen, Some((&sp, &probs)));
        Ok(())
    }
}

/// Runs one seeded experiment end to end: stratified split, random first
/// batch, then strategy-driven batches until the budget is spent.
pub fn run_al_experiment(ds: &FeatureDataset, cfg: &ExperimentConfig, oracle: &mut dyn Oracle) -> Result<RunRecord> {
    let split = stratified_split(ds, cfg.test_fraction, cfg.seed)?;
    run_on_split(ds, &split, cfg, oracle)
}

pub fn run_on_split(
    ds: &FeatureDataset,
    split: &SplitIndices,
    cfg: &ExperimentConfig,
    oracle: &mut dyn Oracle,
) -> Result<RunRecord> {
    let mut learner = ActiveLearner::from_split(ds, split, *cfg)?;
    while !learner.is_finished() {
        let ids = learner.pending();
        let labels = oracle.label(&ids)?;
        learner.complete_batch(&labels)?;
    }
    Ok(learner.record())
}

/// Fits on the whole train split of `ds` and scores the test split.
pub fn full_pool_baseline(ds: &FeatureDataset, cfg: &ExperimentConfig) -> Result<F1Report> {
    let split = stratified_split(ds, cfg.test_fraction, cfg.seed)?;
    let xtr = ds.instances.select(Axis(0), &split.train);
    let scaler = fit_scaler(&xtr)?;
    let ytr: Vec<usize> = split.train.iter().map(|&i| ds.labels[i]).collect();
    let yte: Vec<usize> = split.test.iter().map(|&i| ds.labels[i]).collect();
    let seed = derive_seed(derive_seed(cfg.seed, stream::MODEL), 0);
    let m = fit(scaler.apply(&xtr)?.view(), &ytr, ds.n_classes(), &cfg.model, seed)?;
    let pred = predict(&m, scaler.apply(&ds.instances.select(Axis(0), &split.test))?.view())?;
    metrics::macro_f1(&yte, &pred, ds.n_classes())
}
