//! Synthetic benchmarks: labelled sinusoid mixtures that go through the
//! windowing pipeline, and Gaussian blobs that live directly in feature space.

use std::f64::consts::{PI, SQRT_2};

use alloom_core::{Channel, FeatureDataset, LabelSpace, RawSeries};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    SineMix,
    Blobs,
}

impl std::str::FromStr for Generator {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "sine_mix" | "sinemix" => Ok(Generator::SineMix),
            "blobs" => Ok(Generator::Blobs),
            other => Err(HarnessError::invalid(format!("unknown generator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub generator: Generator,
    /// Series (SineMix) or points (Blobs) per class; the class count is its length.
    pub counts: Vec<usize>,
    #[serde(default)]
    pub class_names: Option<Vec<String>>,
    /// Gaussian noise: per sample for SineMix, per coordinate for Blobs.
    #[serde(default)]
    pub noise_sigma: Option<f64>,
    #[serde(default = "default_series_seconds")]
    pub series_seconds: f64,
    #[serde(default = "default_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_channels")]
    pub channels: usize,
    /// Scales the per-class offset and amplitude steps of SineMix.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// Distance between any two blob centres.
    #[serde(default = "default_spacing")]
    pub center_spacing: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_series_seconds() -> f64 {
    12.0
}
fn default_rate() -> f64 {
    50.0
}
fn default_channels() -> usize {
    1
}
fn default_separation() -> f64 {
    1.0
}
fn default_spacing() -> f64 {
    5.0
}
fn default_seed() -> u64 {
    1415
}

impl SyntheticSpec {
    pub fn sine_mix(counts: Vec<usize>) -> Self {
        Self {
            generator: Generator::SineMix,
            counts,
            class_names: None,
            noise_sigma: None,
            series_seconds: default_series_seconds(),
            sample_rate_hz: default_rate(),
            channels: default_channels(),
            separation: default_separation(),
            center_spacing: default_spacing(),
            seed: default_seed(),
        }
    }

    pub fn blobs(counts: Vec<usize>, sigma: f64) -> Self {
        Self {
            generator: Generator::Blobs,
            noise_sigma: Some(sigma),
            ..Self::sine_mix(counts)
        }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn sigma(&self) -> f64 {
        self.noise_sigma.unwrap_or(match self.generator {
            Generator::SineMix => 0.3,
            Generator::Blobs => 0.5,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.len() < 2 {
            return Err(HarnessError::invalid("need at least 2 classes"));
        }
        if self.counts.contains(&0) {
            return Err(HarnessError::invalid("every class needs a count >= 1"));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.counts.len() {
                return Err(HarnessError::invalid("class_names and counts differ in length"));
            }
        }
        let sigma = self.sigma();
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(HarnessError::invalid("noise_sigma must be finite and >= 0"));
        }
        if self.generator == Generator::SineMix {
            if !(self.sample_rate_hz > 0.0 && self.series_seconds > 0.0) {
                return Err(HarnessError::invalid("series_seconds and sample_rate_hz must be positive"));
            }
            if !(self.separation > 0.0 && self.separation.is_finite()) {
                return Err(HarnessError::invalid("separation must be positive"));
            }
            if self.channels == 0 {
                return Err(HarnessError::invalid("channels must be >= 1"));
            }
        }
        Ok(())
    }

    fn class_name(&self, c: usize) -> String {
        match &self.class_names {
            Some(names) => names[c].clone(),
            None => format!("c{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Synthetic {
    Series(Vec<RawSeries>),
    Features(FeatureDataset),
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    Ok(match spec.generator {
        Generator::SineMix => Synthetic::Series(sine_mix(spec)?),
        Generator::Blobs => Synthetic::Features(blobs(spec)?),
    })
}

/// Class c oscillates at 0.5 + 0.35c Hz with amplitude 1 + 0.5sc around an
/// offset of 0.5sc, where s is the separation; each series jitters those
/// slightly and draws its own phase.
pub fn sine_mix(spec: &SyntheticSpec) -> Result<Vec<RawSeries>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma()).map_err(|e| HarnessError::invalid(e.to_string()))?;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let n = (spec.series_seconds * spec.sample_rate_hz).round() as usize;
    let sep = spec.separation;
    let mut out = Vec::with_capacity(spec.counts.iter().sum());
    for (c, &count) in spec.counts.iter().enumerate() {
        let cf = c as f64;
        for _ in 0..count {
            let channels = (0..spec.channels)
                .map(|k| {
                    let freq = (0.5 + 0.35 * cf) * (k + 1) as f64 * (1.0 + 0.03 * unit.sample(&mut rng));
                    let amp = (1.0 + 0.5 * sep * cf) * (1.0 + 0.08 * unit.sample(&mut rng));
                    let offset = 0.5 * sep * cf + 0.05 * unit.sample(&mut rng);
                    let phase = rng.random::<f64>() * 2.0 * PI;
                    let samples = (0..n)
                        .map(|i| {
                            let t = i as f64 / spec.sample_rate_hz;
                            offset + amp * (2.0 * PI * freq * t + phase).sin() + noise.sample(&mut rng)
                        })
                        .collect();
                    Channel::new(format!("ch{k}"), samples)
                })
                .collect();
            let id = format!("s{:05}", out.len());
            out.push(RawSeries::new(id, channels, spec.sample_rate_hz, spec.class_name(c))?);
        }
    }
    Ok(out)
}

/// Isotropic Gaussians in K dimensions centred at `spacing / √2 · e_c`, so
/// every pair of centres is `spacing` apart.
pub fn blobs(spec: &SyntheticSpec) -> Result<FeatureDataset> {
    spec.validate()?;
    let k = spec.n_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma()).map_err(|e| HarnessError::invalid(e.to_string()))?;
    let radius = spec.center_spacing / SQRT_2;
    let n: usize = spec.counts.iter().sum();
    let mut data = Vec::with_capacity(n * k);
    let mut labels = Vec::with_capacity(n);
    for (c, &count) in spec.counts.iter().enumerate() {
        for _ in 0..count {
            data.extend((0..k).map(|j| if j == c { radius } else { 0.0 } + noise.sample(&mut rng)));
            labels.push(c);
        }
    }
    let label_space = LabelSpace::new((0..k).map(|c| spec.class_name(c)))?;
    Ok(FeatureDataset::new(
        Array2::from_shape_vec((n, k), data).expect("n*k values"),
        labels,
        label_space,
        (0..k).map(|j| format!("x{j}")).collect(),
        None,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skewed_sine_mix_counts() {
        let series = sine_mix(&SyntheticSpec::sine_mix(vec![500, 7, 172, 44])).unwrap();
        let mut counts = [0usize; 4];
        for s in &series {
            counts[s.label[1..].parse::<usize>().unwrap()] += 1;
        }
        assert_eq!(counts, [500, 7, 172, 44]);
        assert!(series.iter().all(|s| s.len() == 600));
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec::sine_mix(vec![3, 3]);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
        let b = SyntheticSpec::blobs(vec![10, 10, 10], 0.5);
        assert_eq!(blobs(&b).unwrap(), blobs(&b).unwrap());
    }

    #[test]
    fn blob_centres_are_equidistant() {
        let ds = blobs(&SyntheticSpec::blobs(vec![1, 1, 1], 0.0)).unwrap();
        for a in 0..3 {
            for b in (a + 1)..3 {
                let d: f64 = (&ds.instances.row(a) - &ds.instances.row(b)).mapv(|v| v * v).sum().sqrt();
                assert!((d - 5.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_empty_class() {
        assert!(gen_synthetic(&SyntheticSpec::sine_mix(vec![3, 0])).is_err());
    }
}
