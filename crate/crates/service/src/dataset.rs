//! Datasets served to annotators: features plus, for raw sources, the window
//! samples behind each instance.

use std::collections::HashMap;
use std::path::Path;

use alloom_core::featurize::{featurize_dataset, slide_windows};
use alloom_core::{FeatureDataset, RawSeries};
use alloom_harness::io::{load_feature_csv_with_ids, load_raw_series_csv};
use alloom_harness::spec::{DatasetSource, WindowSpec};
use alloom_harness::synth::{gen_synthetic, Synthetic};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRef {
    pub series: usize,
    pub start_index: usize,
    pub len: usize,
}

#[derive(Debug)]
pub struct LoadedDataset {
    pub ds: FeatureDataset,
    /// External instance id of every row.
    pub ids: Vec<usize>,
    row_of: HashMap<usize, usize>,
    series: Vec<RawSeries>,
    windows: Vec<WindowRef>,
}

impl LoadedDataset {
    pub fn load(src: &DatasetSource, window: Option<&WindowSpec>, base: &Path) -> Result<Self, ApiError> {
        let resolve = |p: &Path| {
            let full = if p.is_relative() { base.join(p) } else { p.to_path_buf() };
            if full.is_file() {
                Ok(full)
            } else {
                Err(ApiError::NotFound(format!("dataset '{}' not found", p.display())))
            }
        };
        match src {
            DatasetSource::FeatureCsv { path } => {
                if window.is_some() {
                    return Err(ApiError::BadRequest("window applies to raw series only".into()));
                }
                let (ds, ids) = load_feature_csv_with_ids(&resolve(path)?).map_err(ApiError::from_harness)?;
                Ok(Self::new(ds, ids, Vec::new(), Vec::new()))
            }
            DatasetSource::RawCsv { path, schema } => {
                let series = load_raw_series_csv(&resolve(path)?, schema).map_err(ApiError::from_harness)?;
                Self::from_series(series, window)
            }
            DatasetSource::Synthetic(spec) => match gen_synthetic(spec).map_err(ApiError::from_harness)? {
                Synthetic::Series(series) => Self::from_series(series, window),
                Synthetic::Features(ds) => {
                    if window.is_some() {
                        return Err(ApiError::BadRequest("window applies to raw series only".into()));
                    }
                    let ids = (0..ds.len()).collect();
                    Ok(Self::new(ds, ids, Vec::new(), Vec::new()))
                }
            },
        }
    }

    fn from_series(series: Vec<RawSeries>, window: Option<&WindowSpec>) -> Result<Self, ApiError> {
        let w = window.ok_or_else(|| ApiError::BadRequest("raw series need a window section".into()))?;
        let cfg = w.config().map_err(ApiError::from_harness)?;
        let ds = featurize_dataset(&series, &cfg).map_err(ApiError::from_core)?;
        let mut windows = Vec::with_capacity(ds.len());
        for (si, s) in series.iter().enumerate() {
            for win in slide_windows(s, &cfg).map_err(ApiError::from_core)? {
                windows.push(WindowRef {
                    series: si,
                    start_index: win.start_index,
                    len: win.len(),
                });
            }
        }
        debug_assert_eq!(windows.len(), ds.len());
        let ids = (0..ds.len()).collect();
        Ok(Self::new(ds, ids, series, windows))
    }

    fn new(ds: FeatureDataset, ids: Vec<usize>, series: Vec<RawSeries>, windows: Vec<WindowRef>) -> Self {
        let row_of = ids.iter().enumerate().map(|(r, &id)| (id, r)).collect();
        Self {
            ds,
            ids,
            row_of,
            series,
            windows,
        }
    }

    pub fn row_of(&self, instance_id: usize) -> Option<usize> {
        self.row_of.get(&instance_id).copied()
    }

    /// Per-channel samples behind `row`, when the source was raw.
    pub fn window_samples(&self, row: usize) -> Option<Vec<(String, Vec<f64>)>> {
        let w = self.windows.get(row)?;
        let s = &self.series[w.series];
        Some(
            s.channels
                .iter()
                .map(|c| (c.name.clone(), c.samples[w.start_index..w.start_index + w.len].to_vec()))
                .collect(),
        )
    }
}
