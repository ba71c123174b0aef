//! Shared domain types.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};

/// One named channel of a recorded series.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub samples: Vec<f64>,
}

impl Channel {
    pub fn new(name: impl Into<String>, samples: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            samples,
        }
    }
}

/// A single recorded run: equal-length channels sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub series_id: String,
    pub channels: Vec<Channel>,
    pub sample_rate_hz: f64,
    pub label: String,
    /// Start timestamp in seconds, when known.
    pub t0: Option<f64>,
}

impl RawSeries {
    pub fn new(
        series_id: impl Into<String>,
        channels: Vec<Channel>,
        sample_rate_hz: f64,
        label: impl Into<String>,
    ) -> Result<Self> {
        let series = Self {
            series_id: series_id.into(),
            channels,
            sample_rate_hz,
            label: label.into(),
            t0: None,
        };
        series.validate()?;
        Ok(series)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "series '{}': sample rate must be positive",
                self.series_id
            )));
        }
        let first = self
            .channels
            .first()
            .ok_or(Error::Empty("series has no channels"))?;
        if first.samples.is_empty() {
            return Err(Error::Empty("series has no samples"));
        }
        if self
            .channels
            .iter()
            .any(|c| c.samples.len() != first.samples.len())
        {
            return Err(Error::SchemaMismatch(format!(
                "series '{}': channels differ in length",
                self.series_id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn channel_names(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Ordered, duplicate-free set of class names.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSpace {
    classes: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSpace {
    pub fn new<I, S>(classes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut space = Self::default();
        for class in classes {
            let class = class.into();
            if space.index.contains_key(&class) {
                return Err(Error::InvalidConfig(format!("duplicate class '{class}'")));
            }
            space.push(class);
        }
        Ok(space)
    }

    /// Builds the space in first-appearance order.
    pub fn from_labels<'a, I>(labels: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut space = Self::default();
        for label in labels {
            if !space.index.contains_key(label) {
                space.push(label.to_string());
            }
        }
        space
    }

    fn push(&mut self, class: String) {
        self.index.insert(class.clone(), self.classes.len());
        self.classes.push(class);
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn ordinal(&self, class: &str) -> Option<usize> {
        self.index.get(class).copied()
    }

    pub fn name(&self, ordinal: usize) -> Option<&str> {
        self.classes.get(ordinal).map(String::as_str)
    }
}

/// Where a feature row came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub series_id: String,
    pub window_start_s: f64,
    pub window_end_s: f64,
}

/// Windowed feature vectors with their labels: the active-learning pool.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub instances: Array2<f64>,
    pub labels: Vec<usize>,
    pub label_space: LabelSpace,
    pub feature_names: Vec<String>,
    pub provenance: Option<Vec<Provenance>>,
}

impl FeatureDataset {
    pub fn new(
        instances: Array2<f64>,
        labels: Vec<usize>,
        label_space: LabelSpace,
        feature_names: Vec<String>,
        provenance: Option<Vec<Provenance>>,
    ) -> Result<Self> {
        let ds = Self {
            instances,
            labels,
            label_space,
            feature_names,
            provenance,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = self.instances.dim();
        if d == 0 {
            return Err(Error::Empty("dataset has no features"));
        }
        if self.feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.feature_names.len(),
            });
        }
        if self.labels.len() != n {
            return Err(Error::SchemaMismatch(format!(
                "{} labels for {} instances",
                self.labels.len(),
                n
            )));
        }
        if let Some(p) = &self.provenance {
            if p.len() != n {
                return Err(Error::SchemaMismatch(format!(
                    "{} provenance rows for {} instances",
                    p.len(),
                    n
                )));
            }
        }
        let k = self.label_space.len();
        if let Some(&label) = self.labels.iter().find(|&&l| l >= k) {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: k,
            });
        }
        if self.instances.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.instances.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.label_space.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        bincount(&self.labels, self.n_classes())
    }

    /// Rows `indices` as a new dataset, in the given order.
    pub fn subset(&self, indices: &[usize]) -> FeatureDataset {
        FeatureDataset {
            instances: self.instances.select(ndarray::Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_space: self.label_space.clone(),
            feature_names: self.feature_names.clone(),
            provenance: self
                .provenance
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i].clone()).collect()),
        }
    }
}

pub(crate) fn bincount(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &l in labels {
        if l >= counts.len() {
            counts.resize(l + 1, 0);
        }
        counts[l] += 1;
    }
    counts
}
