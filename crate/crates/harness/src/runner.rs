//! Executes experiment specs: featurize, run every (cell, template, seed),
//! and write the results table, per-step summaries and a manifest.

use std::path::{Path, PathBuf};

use alloom_core::engine::{run_al_experiment, summarize_runs, RunRecord, SimulatedOracle, StepSummary};
use alloom_core::featurize::{featurize_dataset, WindowConfig};
use alloom_core::seeds::pi_seeds;
use alloom_core::split::stratified_test_counts;
use alloom_core::{FeatureDataset, RawSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};
use crate::io::{load_feature_csv, load_raw_series_csv};
use crate::results::{results_to_string, rows_for, ResultRow, RunLabels};
use crate::spec::{DatasetSource, ExperimentSpec, GridSpec, WindowSpec};
use crate::synth::{gen_synthetic, Synthetic};

pub const THREADS_ENV: &str = "AL_LOOM_THREADS";
const EPS: f64 = 1e-9;

/// Worker pool sized by `AL_LOOM_THREADS` when set.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| HarnessError::invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| HarnessError::Pool(e.to_string()))
}

pub enum Source {
    Raw(Vec<RawSeries>),
    Features(FeatureDataset),
}

pub fn load_source(src: &DatasetSource) -> Result<Source> {
    Ok(match src {
        DatasetSource::RawCsv { path, schema } => Source::Raw(load_raw_series_csv(path, schema)?),
        DatasetSource::FeatureCsv { path } => Source::Features(load_feature_csv(path)?),
        DatasetSource::Synthetic(s) => match gen_synthetic(s)? {
            Synthetic::Series(series) => Source::Raw(series),
            Synthetic::Features(ds) => Source::Features(ds),
        },
    })
}

/// A window/overlap combination is usable when the window fits and the
/// second window starts no later than the middle of the series.
pub fn cell_feasible(window_s: f64, overlap: f64, series_seconds: f64) -> bool {
    let stride = window_s * (1.0 - overlap);
    window_s <= series_seconds + EPS && 2.0 * stride <= series_seconds + EPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub window_s: f64,
    pub overlap: f64,
    /// Instances the cell yields; `None` when skipped.
    pub instances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl GridCell {
    pub fn executed(&self) -> bool {
        self.skipped.is_none()
    }
}

/// Enumerates the grid against the shortest series without featurizing.
pub fn plan_grid(grid: &GridSpec, series: &[RawSeries]) -> Vec<GridCell> {
    let shortest = series
        .iter()
        .map(RawSeries::duration_seconds)
        .fold(f64::INFINITY, f64::min);
    let mut cells = Vec::new();
    for &w in &grid.windows {
        for &o in &grid.overlaps {
            let feasible = cell_feasible(w, o, shortest);
            let instances = feasible.then(|| {
                WindowConfig::new(w, o, alloom_core::featurize::FeatureSet::Tactile11)
                    .map(|cfg| series.iter().map(|s| cfg.window_count(s.duration_seconds())).sum())
                    .unwrap_or(0)
            });
            cells.push(GridCell {
                window_s: w,
                overlap: o,
                instances,
                skipped: (!feasible).then(|| {
                    format!(
                        "window {w} s with {}% overlap does not fit a {shortest} s series",
                        o * 100.0
                    )
                }),
            });
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub window_s: Option<f64>,
    pub overlap: Option<f64>,
    pub experiment: usize,
    pub strategy: String,
    pub model: String,
    pub balanced: bool,
    pub budget: usize,
    pub step: usize,
    pub steps: Vec<StepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub spec_sha256: String,
    pub seeds: Vec<u64>,
    pub results_sha256: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub records: Vec<(usize, RunRecord)>,
    pub summaries: Vec<GroupSummary>,
    pub cells: Vec<GridCell>,
    pub manifest: Manifest,
}

impl RunOutput {
    pub fn results_csv(&self) -> String {
        results_to_string(&self.rows)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Cell {
    window: Option<WindowSpec>,
    ds: FeatureDataset,
}

/// Runs `spec` in memory. `spec_text` is hashed into the manifest.
pub fn run_spec(spec: &ExperimentSpec, spec_text: &str) -> Result<RunOutput> {
    spec.validate()?;
    let seeds = pi_seeds(spec.seed_count)?;
    let source = load_source(&spec.dataset)?;

    let (cells, grid_cells) = match (&source, &spec.grid) {
        (Source::Features(ds), _) => (
            vec![Cell {
                window: None,
                ds: ds.clone(),
            }],
            Vec::new(),
        ),
        (Source::Raw(series), Some(grid)) => {
            let plan = plan_grid(grid, series);
            let base = spec.window.unwrap_or(WindowSpec {
                window_s: 1.0,
                overlap: 0.5,
                feature_set: alloom_core::featurize::FeatureSet::Tactile11,
                history_horizon_s: None,
            });
            let cells = plan
                .iter()
                .filter(|c| c.executed())
                .map(|c| {
                    let w = WindowSpec {
                        window_s: c.window_s,
                        overlap: c.overlap,
                        ..base
                    };
                    Ok(Cell {
                        ds: featurize_dataset(series, &w.config()?)?,
                        window: Some(w),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (cells, plan)
        }
        (Source::Raw(series), None) => {
            let w = spec.window.expect("validated: raw sources carry a window");
            (
                vec![Cell {
                    ds: featurize_dataset(series, &w.config()?)?,
                    window: Some(w),
                }],
                Vec::new(),
            )
        }
    };

    struct Job {
        cell: usize,
        experiment: usize,
        cfg: alloom_core::engine::ExperimentConfig,
    }
    let mut jobs = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for (ei, t) in spec.experiments.iter().enumerate() {
            let test: usize = stratified_test_counts(&cell.ds.class_counts(), t.test_fraction).iter().sum();
            let pool = cell.ds.len() - test;
            for &seed in &seeds {
                jobs.push(Job {
                    cell: ci,
                    experiment: ei,
                    cfg: t.config(pool, seed)?,
                });
            }
        }
    }

    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|job| {
            let ds = &cells[job.cell].ds;
            run_al_experiment(ds, &job.cfg, &mut SimulatedOracle::new(ds.labels.clone()))
        })
        .collect::<std::result::Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (group, chunk) in jobs.chunks(seeds.len().max(1)).zip(records.chunks(seeds.len().max(1))) {
        let job = &group[0];
        let t = &spec.experiments[job.experiment];
        let window = cells[job.cell].window;
        let labels = RunLabels {
            strategy: t.strategy.as_str().to_string(),
            balanced: t.balanced,
            model: t.model.label(),
            window_s: window.map(|w| w.window_s),
            overlap: window.map(|w| w.overlap),
        };
        for r in chunk {
            rows.extend(rows_for(r, &labels, spec.timing));
        }
        summaries.push(GroupSummary {
            window_s: labels.window_s,
            overlap: labels.overlap,
            experiment: job.experiment,
            strategy: labels.strategy,
            model: labels.model,
            balanced: labels.balanced,
            budget: job.cfg.budget,
            step: job.cfg.step,
            steps: if chunk.iter().all(|r| r.steps.iter().all(|s| s.macro_f1.is_some())) && !chunk.is_empty() {
                summarize_runs(chunk)?
            } else {
                Vec::new()
            },
        });
    }

    let results_sha256 = sha256_hex(results_to_string(&rows).as_bytes());
    Ok(RunOutput {
        rows,
        records: jobs.iter().map(|j| j.experiment).zip(records).collect(),
        summaries,
        cells: grid_cells,
        manifest: Manifest {
            tool: "alloom".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            spec_sha256: sha256_hex(spec_text.as_bytes()),
            seeds,
            results_sha256,
        },
    })
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
    pub grid: Option<PathBuf>,
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<PathBuf> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| HarnessError::io(&p, e))?;
        Ok(p)
    };
    Ok(OutputFiles {
        results: write("results.csv", out.results_csv())?,
        summary: write("summary.json", pretty(&out.summaries))?,
        manifest: write("manifest.json", pretty(&out.manifest))?,
        grid: if out.cells.is_empty() {
            None
        } else {
            Some(write("grid.json", pretty(&out.cells))?)
        },
    })
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// Loads the spec's dataset and reports the grid plan without running it.
pub fn dry_run_grid(spec: &ExperimentSpec) -> Result<Vec<GridCell>> {
    let grid = spec.grid.clone().unwrap_or_default();
    match load_source(&spec.dataset)? {
        Source::Raw(series) => Ok(plan_grid(&grid, &series)),
        Source::Features(_) => Err(HarnessError::invalid("grid mode needs raw series")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_on_twelve_second_series() {
        let mut skipped = Vec::new();
        let grid = GridSpec::default();
        for &w in &grid.windows {
            for &o in &grid.overlaps {
                if !cell_feasible(w, o, 12.0) {
                    skipped.push((w, o));
                }
            }
        }
        assert_eq!(skipped, vec![(9.0, 0.25)]);
    }

    #[test]
    fn oversized_window_skipped() {
        assert!(!cell_feasible(13.0, 0.75, 12.0));
        assert!(cell_feasible(12.0, 0.75, 12.0));
    }

    #[test]
    fn sha_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
