//! Experiment spec files.
//!
//! A spec is a strict JSON document; unknown keys are rejected.
//!
//! ```json
//! {
//!   "version": 1,
//!   "dataset": { "kind": "synthetic", "generator": "sine_mix", "counts": [500, 7, 172, 44] },
//!   "window": { "window_s": 6, "overlap": 0.5 },
//!   "experiments": [
//!     { "strategy": "uncertainty", "model": "random_forest", "balanced": true,
//!       "budget_fraction": 0.7, "step": 50 }
//!   ],
//!   "seed_count": 20,
//!   "output_dir": "out"
//! }
//! ```

use std::path::{Path, PathBuf};

use alloom_core::engine::ExperimentConfig;
use alloom_core::featurize::{FeatureSet, WindowConfig};
use alloom_core::learners::ModelConfig;
use alloom_core::strategies::{StrategyConfig, StrategyKind};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::io::RawSchema;
use crate::synth::SyntheticSpec;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub version: u32,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub window: Option<WindowSpec>,
    pub experiments: Vec<ExperimentTemplate>,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    pub output_dir: PathBuf,
    /// Record wall-clock time per step; off keeps results byte-reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

fn default_seed_count() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    RawCsv { path: PathBuf, schema: RawSchema },
    FeatureCsv { path: PathBuf },
    Synthetic(SyntheticSpec),
}

impl DatasetSource {
    pub fn is_raw(&self) -> bool {
        match self {
            DatasetSource::RawCsv { .. } => true,
            DatasetSource::FeatureCsv { .. } => false,
            DatasetSource::Synthetic(s) => s.generator == crate::synth::Generator::SineMix,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub window_s: f64,
    pub overlap: f64,
    #[serde(default = "default_feature_set")]
    pub feature_set: FeatureSet,
    #[serde(default)]
    pub history_horizon_s: Option<f64>,
}

fn default_feature_set() -> FeatureSet {
    FeatureSet::Tactile11
}

impl WindowSpec {
    pub fn config(&self) -> Result<WindowConfig> {
        let mut cfg = WindowConfig::new(self.window_s, self.overlap, self.feature_set)?;
        if let Some(h) = self.history_horizon_s {
            cfg.history_horizon_s = h;
            cfg.validate()?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_windows")]
    pub windows: Vec<f64>,
    #[serde(default = "default_overlaps")]
    pub overlaps: Vec<f64>,
}

fn default_windows() -> Vec<f64> {
    vec![1.0, 3.0, 6.0, 9.0]
}

fn default_overlaps() -> Vec<f64> {
    vec![0.75, 0.5, 0.25]
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            windows: default_windows(),
            overlaps: default_overlaps(),
        }
    }
}

/// A named preset or a full model configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset(String),
    Full(ModelConfig),
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<ModelConfig> {
        let cfg = match self {
            ModelSpec::Preset(name) => preset(name)?,
            ModelSpec::Full(cfg) => *cfg,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Name used in result tables.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Preset(name) => name.clone(),
            ModelSpec::Full(cfg) => cfg.kind.as_str().to_string(),
        }
    }
}

pub fn preset(name: &str) -> Result<ModelConfig> {
    Ok(match name {
        "decision_tree" | "dt" => ModelConfig::decision_tree(),
        "random_forest" | "rf" => ModelConfig::random_forest(),
        "extra_trees" | "et" => ModelConfig::extra_trees(),
        "xgb_like" | "xgb" => ModelConfig::xgb_like(),
        "gb_like" | "gb" => ModelConfig::gb_like(),
        other => return Err(HarnessError::invalid(format!("unknown model preset '{other}'"))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentTemplate {
    pub strategy: StrategyKind,
    #[serde(default)]
    pub committee_size: Option<usize>,
    #[serde(default)]
    pub emc_candidate_cap: Option<usize>,
    pub model: ModelSpec,
    #[serde(default)]
    pub balanced: bool,
    /// Absolute budget; exclusive with `budget_fraction`.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Budget as a fraction of the train pool, rounded down.
    #[serde(default)]
    pub budget_fraction: Option<f64>,
    pub step: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl ExperimentTemplate {
    pub fn strategy_config(&self) -> StrategyConfig {
        let mut s = StrategyConfig::new(self.strategy);
        if let Some(c) = self.committee_size {
            s.committee_size = c;
        }
        if let Some(c) = self.emc_candidate_cap {
            s.emc_candidate_cap = c;
        }
        s
    }

    pub fn budget_for(&self, pool: usize) -> Result<usize> {
        match (self.budget, self.budget_fraction) {
            (Some(b), None) => Ok(b),
            (None, Some(f)) if f > 0.0 && f <= 1.0 => Ok((f * pool as f64 + 1e-9).floor() as usize),
            (None, Some(f)) => Err(HarnessError::invalid(format!("budget_fraction {f} outside (0, 1]"))),
            _ => Err(HarnessError::invalid("give exactly one of budget and budget_fraction")),
        }
    }

    /// Concrete engine config for one seed on a pool of `pool` instances.
    pub fn config(&self, pool: usize, seed: u64) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(
            self.strategy_config(),
            self.model.resolve()?,
            self.budget_for(pool)?,
            self.step,
            seed,
        );
        cfg.balanced = self.balanced;
        cfg.test_fraction = self.test_fraction;
        cfg.validate(pool)?;
        Ok(cfg)
    }

    fn check_static(&self) -> Result<()> {
        self.strategy_config().validate()?;
        self.model.resolve()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(HarnessError::invalid("test_fraction must lie in (0, 1)"));
        }
        if self.step == 0 {
            return Err(HarnessError::invalid("step must be >= 1"));
        }
        if self.strategy == StrategyKind::Qbc && self.step < 2 {
            return Err(HarnessError::invalid("query-by-committee needs step >= 2"));
        }
        self.budget_for(1)?;
        Ok(())
    }
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec = Self::parse(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Deserializes without the semantic checks of [`validate`](Self::validate).
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HarnessError::invalid(format!("invalid spec: {e}")))
    }

    /// Reads a spec file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let (spec, text) = Self::read(path)?;
        spec.validate()?;
        Ok((spec, text))
    }

    /// [`load`](Self::load) without validation, for callers that amend the spec first.
    pub fn read(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut spec = Self::parse(&text)?;
        spec.resolve_paths(path.parent().unwrap_or(Path::new("")));
        Ok((spec, text))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.dataset {
            DatasetSource::RawCsv { path, .. } | DatasetSource::FeatureCsv { path } => fix(path),
            DatasetSource::Synthetic(_) => {}
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SPEC_VERSION {
            return Err(HarnessError::invalid(format!(
                "unsupported spec version {} (expected {SPEC_VERSION})",
                self.version
            )));
        }
        if self.experiments.is_empty() {
            return Err(HarnessError::invalid("spec lists no experiments"));
        }
        for t in &self.experiments {
            t.check_static()?;
        }
        alloom_core::seeds::pi_seeds(self.seed_count)?;
        if let DatasetSource::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        match (self.dataset.is_raw(), &self.window, &self.grid) {
            (true, None, None) => return Err(HarnessError::invalid("raw series need a window section")),
            (false, Some(_), _) | (false, _, Some(_)) => {
                return Err(HarnessError::invalid("window and grid apply to raw series only"))
            }
            _ => {}
        }
        if let Some(w) = &self.window {
            w.config()?;
        }
        if let Some(g) = &self.grid {
            if g.windows.is_empty() || g.overlaps.is_empty() {
                return Err(HarnessError::invalid("grid needs at least one window and one overlap"));
            }
            for &w in &g.windows {
                for &o in &g.overlaps {
                    WindowConfig::new(w, o, FeatureSet::Tactile11)?;
                }
            }
        }
        Ok(())
    }
}
