//! Wire types of the annotation API. Every response carries `api_version`.

use std::fmt;

use alloom_core::engine::StepEntry;
use alloom_harness::spec::{DatasetSource, ExperimentTemplate, WindowSpec};
use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::ApiError;
use crate::API_VERSION;

fn default_seed() -> u64 {
    1415
}

/// Body of `POST /sessions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub api_version: Option<u32>,
    /// File paths resolve against the server's data directory.
    pub dataset: DatasetSource,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    pub experiment: ExperimentTemplate,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub holdout: HoldoutMode,
}

/// `split` keeps a stratified test split aside and reports macro-F1 per
/// step; `none` puts every instance in the pool and reports no scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutMode {
    #[default]
    Split,
    None,
}

pub fn check_version(v: Option<u32>) -> Result<(), ApiError> {
    match v {
        None | Some(API_VERSION) => Ok(()),
        Some(other) => Err(ApiError::BadRequest(format!(
            "unsupported api_version {other}; this server speaks {API_VERSION}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    AwaitingLabels,
    Training,
    Finished,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub api_version: u32,
    pub session_id: String,
    pub state: SessionState,
    pub strategy: String,
    pub model: String,
    pub balanced: bool,
    pub budget: usize,
    pub step: usize,
    pub pool_size: usize,
    pub labeled_count: usize,
    pub classes: Vec<String>,
    pub feature_names: Vec<String>,
    pub evaluated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceView {
    pub series_id: String,
    pub window_start_s: f64,
    pub window_end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelView {
    pub name: String,
    pub samples: Vec<f64>,
}

/// One instance to annotate. Carries the model's view of it, never a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub instance_id: usize,
    pub features: Vec<f64>,
    #[serde(default)]
    pub provenance: Option<ProvenanceView>,
    /// Window samples per channel, for raw sources.
    #[serde(default)]
    pub window: Option<Vec<ChannelView>>,
    /// Strategy score; absent for the random first batch.
    #[serde(default)]
    pub score: Option<f64>,
    #[serde(default)]
    pub predicted_class: Option<String>,
    #[serde(default)]
    pub predicted_ordinal: Option<usize>,
    #[serde(default)]
    pub probabilities: Option<Vec<f64>>,
    /// The annotator's own answer when this item was already submitted.
    #[serde(default)]
    pub submitted_class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponse {
    pub api_version: u32,
    pub session_id: String,
    pub state: SessionState,
    /// Completed iterations before this batch.
    pub iteration: usize,
    pub items: Vec<BatchItem>,
    /// Items still waiting for a label.
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub api_version: u32,
    pub session: SessionInfo,
    pub batch: BatchResponse,
}

/// A class given by name or by ordinal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClassRef {
    Ordinal(usize),
    Name(String),
}

impl fmt::Display for ClassRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassRef::Ordinal(o) => write!(f, "{o}"),
            ClassRef::Name(n) => write!(f, "'{n}'"),
        }
    }
}

/// Body of `POST /sessions/{id}/labels`: `{"labels": {"17": "walk", "42": 2}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelsRequest {
    #[serde(default)]
    pub api_version: Option<u32>,
    #[serde(deserialize_with = "ordered_entries", serialize_with = "entries_as_map")]
    pub labels: Vec<(String, ClassRef)>,
}

/// Keeps map entries in document order, repeated keys included, so that
/// the server can reject them instead of silently keeping the last.
fn ordered_entries<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(String, ClassRef)>, D::Error> {
    struct Entries;
    impl<'de> Visitor<'de> for Entries {
        type Value = Vec<(String, ClassRef)>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a map from instance id to class")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut out = Vec::new();
            while let Some(entry) = map.next_entry::<String, ClassRef>()? {
                out.push(entry);
            }
            Ok(out)
        }
    }
    d.deserialize_map(Entries)
}

fn entries_as_map<S: serde::Serializer>(v: &[(String, ClassRef)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(v.len()))?;
    for (k, c) in v {
        m.serialize_entry(k, c)?;
    }
    m.end()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsResponse {
    pub api_version: u32,
    pub session_id: String,
    pub state: SessionState,
    pub accepted: usize,
    pub remaining: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressResponse {
    pub api_version: u32,
    pub session_id: String,
    pub state: SessionState,
    pub budget: usize,
    pub labeled_count: usize,
    pub labeled_class_counts: Vec<usize>,
    pub classes: Vec<String>,
    /// One entry per completed iteration; `queried` holds instance ids.
    pub steps: Vec<StepEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub api_version: u32,
    pub status: String,
    pub sessions: usize,
}
