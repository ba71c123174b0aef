//! Per-step aggregation of macro-F1 across seeded runs.

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::featurize::quantile_sorted;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub step: usize,
    pub labeled_count: usize,
    pub runs: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// sample standard deviation (0 for a single run)
    pub std: f64,
}

pub fn summarize_values(step: usize, labeled_count: usize, values: &[f64]) -> StepSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let std = if sorted.len() > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    StepSummary {
        step,
        labeled_count,
        runs: sorted.len(),
        median: quantile_sorted(&sorted, 0.5),
        q25: quantile_sorted(&sorted, 0.25),
        q75: quantile_sorted(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        mean,
        std,
    }
}

pub fn summarize_runs(records: &[RunRecord]) -> Result<Vec<StepSummary>> {
    let first = records.first().ok_or(Error::Empty("no run records"))?;
    let grid: Vec<usize> = first.steps.iter().map(|s| s.labeled_count).collect();
    for r in records {
        if r.steps.iter().map(|s| s.labeled_count).ne(grid.iter().copied()) {
            return Err(Error::MismatchedStepGrid);
        }
    }
    grid.iter()
        .enumerate()
        .map(|(i, &labeled_count)| {
            let values: Vec<f64> = records
                .iter()
                .map(|r| r.steps[i].macro_f1.ok_or(Error::Empty("step without test metric")))
                .collect::<Result<_>>()?;
            Ok(summarize_values(i, labeled_count, &values))
        })
        .collect()
}
