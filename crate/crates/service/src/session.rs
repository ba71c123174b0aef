//! One annotation session: a dataset, an [`ActiveLearner`] and the labels
//! collected so far for its outstanding batch.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use alloom_core::engine::{ActiveLearner, ExperimentConfig, StepEntry};
use alloom_core::featurize::fit_scaler;
use alloom_core::split::{stratified_split, stratified_test_counts};
use alloom_harness::io::write_feature_csv;

use crate::api::*;
use crate::dataset::LoadedDataset;
use crate::error::ApiError;
use crate::API_VERSION;

pub struct Session {
    pub id: String,
    pub request: CreateSession,
    data: Arc<LoadedDataset>,
    cfg: ExperimentConfig,
    pool_size: usize,
    /// `None` while a retrain runs off the request path.
    learner: Option<ActiveLearner>,
    state: SessionState,
    failure: Option<String>,
    /// Dataset rows of the outstanding batch in query order.
    pending: Vec<usize>,
    /// Labels received so far for `pending`, by row.
    submitted: HashMap<usize, usize>,
    /// Every label committed to the learner, by row.
    labeled: Vec<(usize, usize)>,
    steps: Vec<StepEntry>,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("state", &self.state)
            .field("labeled", &self.labeled.len())
            .finish()
    }
}

impl Session {
    pub fn create(id: String, request: CreateSession, data_dir: &Path) -> Result<Self, ApiError> {
        check_version(request.api_version)?;
        let data = Arc::new(LoadedDataset::load(&request.dataset, request.window.as_ref(), data_dir)?);
        let ds = &data.ds;
        let t = &request.experiment;
        let learner = match request.holdout {
            HoldoutMode::Split => {
                let test: usize = stratified_test_counts(&ds.class_counts(), t.test_fraction).iter().sum();
                let cfg = t.config(ds.len() - test, request.seed).map_err(ApiError::from_harness)?;
                let split = stratified_split(ds, cfg.test_fraction, cfg.seed).map_err(ApiError::from_core)?;
                ActiveLearner::from_split(ds, &split, cfg).map_err(ApiError::from_core)?
            }
            HoldoutMode::None => {
                let cfg = t.config(ds.len(), request.seed).map_err(ApiError::from_harness)?;
                let scaler = fit_scaler(&ds.instances).map_err(ApiError::from_core)?;
                let x = scaler.apply(&ds.instances).map_err(ApiError::from_core)?;
                ActiveLearner::new(x, (0..ds.len()).collect(), ds.n_classes(), None, cfg)
                    .map_err(ApiError::from_core)?
            }
        };
        Ok(Self {
            id,
            request,
            data,
            cfg: *learner.config(),
            pool_size: learner.pool_ids().len(),
            pending: learner.pending(),
            learner: Some(learner),
            state: SessionState::AwaitingLabels,
            failure: None,
            submitted: HashMap::new(),
            labeled: Vec::new(),
            steps: Vec::new(),
        })
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.len()
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            api_version: API_VERSION,
            session_id: self.id.clone(),
            state: self.state,
            strategy: self.cfg.strategy.kind.as_str().to_string(),
            model: self.request.experiment.model.label(),
            balanced: self.cfg.balanced,
            budget: self.cfg.budget,
            step: self.cfg.step,
            pool_size: self.pool_size,
            labeled_count: self.labeled.len(),
            classes: self.data.ds.label_space.classes().to_vec(),
            feature_names: self.data.ds.feature_names.clone(),
            evaluated: self.request.holdout == HoldoutMode::Split,
            error: self.failure.clone(),
        }
    }

    fn class_name(&self, ordinal: usize) -> String {
        self.data.ds.label_space.name(ordinal).unwrap_or("?").to_string()
    }

    /// The outstanding batch; empty once finished and while training.
    pub fn batch(&self) -> BatchResponse {
        let items = match (&self.learner, self.state) {
            (Some(learner), SessionState::AwaitingLabels) => learner
                .pending_items()
                .iter()
                .map(|p| {
                    let row = p.instance_id;
                    BatchItem {
                        instance_id: self.data.ids[row],
                        features: self.data.ds.instances.row(row).to_vec(),
                        provenance: self.data.ds.provenance.as_ref().map(|v| ProvenanceView {
                            series_id: v[row].series_id.clone(),
                            window_start_s: v[row].window_start_s,
                            window_end_s: v[row].window_end_s,
                        }),
                        window: self.data.window_samples(row).map(|chs| {
                            chs.into_iter()
                                .map(|(name, samples)| ChannelView { name, samples })
                                .collect()
                        }),
                        score: p.score,
                        predicted_class: p.predicted.map(|c| self.class_name(c)),
                        predicted_ordinal: p.predicted,
                        probabilities: p.proba.clone(),
                        submitted_class: self.submitted.get(&row).map(|&c| self.class_name(c)),
                    }
                })
                .collect(),
            _ => Vec::new(),
        };
        BatchResponse {
            api_version: API_VERSION,
            session_id: self.id.clone(),
            state: self.state,
            iteration: self.steps.len(),
            items,
            remaining: self.remaining(),
        }
    }

    pub fn remaining(&self) -> usize {
        match self.state {
            SessionState::AwaitingLabels => self.pending.len() - self.submitted.len(),
            _ => 0,
        }
    }

    fn resolve_class(&self, c: &ClassRef) -> Result<usize, ApiError> {
        let space = &self.data.ds.label_space;
        match c {
            ClassRef::Ordinal(o) if *o < space.len() => Ok(*o),
            ClassRef::Name(n) => space
                .ordinal(n)
                .ok_or_else(|| ApiError::Unprocessable(format!("unknown class {c}"))),
            _ => Err(ApiError::Unprocessable(format!("unknown class {c}"))),
        }
    }

    /// Checks a whole submission without changing anything; returns
    /// `(instance_id, ordinal)` pairs.
    pub fn validate_labels(&self, req: &LabelsRequest) -> Result<Vec<(usize, usize)>, ApiError> {
        check_version(req.api_version)?;
        match self.state {
            SessionState::AwaitingLabels => {}
            SessionState::Training => return Err(ApiError::Conflict("session is training; retry shortly".into())),
            SessionState::Finished => return Err(ApiError::Conflict("session is finished".into())),
            SessionState::Failed => return Err(ApiError::Conflict("session failed".into())),
        }
        if req.labels.is_empty() {
            return Err(ApiError::BadRequest("no labels given".into()));
        }
        let outstanding: HashSet<usize> = self.pending.iter().copied().collect();
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(req.labels.len());
        for (key, class) in &req.labels {
            let id: usize = key
                .trim()
                .parse()
                .map_err(|_| ApiError::BadRequest(format!("'{key}' is not an instance id")))?;
            let row = self
                .data
                .row_of(id)
                .filter(|r| outstanding.contains(r))
                .ok_or_else(|| ApiError::Conflict(format!("instance {id} is not in the outstanding batch")))?;
            if !seen.insert(row) {
                return Err(ApiError::Conflict(format!("instance {id} appears twice")));
            }
            if self.submitted.contains_key(&row) {
                return Err(ApiError::Conflict(format!("instance {id} is already labelled")));
            }
            out.push((id, self.resolve_class(class)?));
        }
        Ok(out)
    }

    /// Records validated labels. Returns the batch labels in query order
    /// once every outstanding item has one.
    pub fn apply_labels(&mut self, entries: &[(usize, usize)]) -> Option<Vec<usize>> {
        for &(id, ordinal) in entries {
            let row = self.data.row_of(id).expect("validated");
            self.submitted.insert(row, ordinal);
        }
        (self.submitted.len() == self.pending.len())
            .then(|| self.pending.iter().map(|r| self.submitted[r]).collect())
    }

    /// Hands the learner out for retraining; the session reports
    /// `training` until [`end_training`](Self::end_training).
    pub fn begin_training(&mut self) -> ActiveLearner {
        let learner = self.learner.take().expect("learner present while awaiting labels");
        self.labeled.extend(self.pending.iter().map(|r| (*r, self.submitted[r])));
        self.submitted.clear();
        self.pending.clear();
        self.state = SessionState::Training;
        learner
    }

    pub fn end_training(&mut self, learner: ActiveLearner, outcome: Result<(), String>) {
        self.steps = learner.steps().to_vec();
        self.pending = learner.pending();
        self.state = match outcome {
            Err(e) => {
                self.failure = Some(e);
                SessionState::Failed
            }
            Ok(()) if learner.is_finished() => SessionState::Finished,
            Ok(()) => SessionState::AwaitingLabels,
        };
        self.learner = Some(learner);
    }

    /// Retrains on the calling thread.
    pub fn train_now(&mut self, labels: &[usize]) {
        let mut learner = self.begin_training();
        let outcome = learner.complete_batch(labels).map(|_| ()).map_err(|e| e.to_string());
        self.end_training(learner, outcome);
    }

    pub fn progress(&self) -> ProgressResponse {
        let k = self.data.ds.n_classes();
        let mut counts = vec![0; k];
        for &(_, c) in &self.labeled {
            counts[c] += 1;
        }
        let steps = self
            .steps
            .iter()
            .map(|s| StepEntry {
                queried: s.queried.iter().map(|&r| self.data.ids[r]).collect(),
                ..s.clone()
            })
            .collect();
        ProgressResponse {
            api_version: API_VERSION,
            session_id: self.id.clone(),
            state: self.state,
            budget: self.cfg.budget,
            labeled_count: self.labeled.len(),
            labeled_class_counts: counts,
            classes: self.data.ds.label_space.classes().to_vec(),
            steps,
        }
    }

    /// Labelled instances as a feature file carrying the annotators' labels.
    pub fn export_csv(&self) -> Result<String, ApiError> {
        let rows: Vec<usize> = self.labeled.iter().map(|&(r, _)| r).collect();
        let mut sub = self.data.ds.subset(&rows);
        sub.labels = self.labeled.iter().map(|&(_, c)| c).collect();
        let ids: Vec<usize> = rows.iter().map(|&r| self.data.ids[r]).collect();
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &sub, &ids).map_err(|e| ApiError::Internal(e.to_string()))?;
        String::from_utf8(buf).map_err(|e| ApiError::Internal(e.to_string()))
    }
}
