//! Sliding-window segmentation, statistical features and MinMax scaling.

use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{FeatureDataset, LabelSpace, Provenance, RawSeries};

const EPS: f64 = 1e-9;
const DEFAULT_HORIZON_S: f64 = 24.0 * 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// mean, median, variance, skewness, std, q10, q25, q76, q90, min, max
    Tactile11,
    /// mean, median, std, variance, chi_square, q25, q75, min, max,
    /// kurtosis, skewness, stability
    Fiber12,
}

impl FeatureSet {
    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Tactile11 => &[
                "mean", "median", "variance", "skewness", "std", "q10", "q25", "q76", "q90", "min",
                "max",
            ],
            FeatureSet::Fiber12 => &[
                "mean",
                "median",
                "std",
                "variance",
                "chi_square",
                "q25",
                "q75",
                "min",
                "max",
                "kurtosis",
                "skewness",
                "stability",
            ],
        }
    }

    pub fn len(self) -> usize {
        self.names().len()
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tactile11" | "tactile" => Ok(FeatureSet::Tactile11),
            "fiber12" | "fiber" => Ok(FeatureSet::Fiber12),
            other => Err(Error::InvalidConfig(format!("unknown feature set '{other}'"))),
        }
    }
}

/// Chi-square style dispersion statistic used by [`FeatureSet::Fiber12`].
pub type ChiSquareFn = fn(&[f64], f64) -> f64;

/// Σ(x − x̄)² / x̄, or 0 when the mean is (near) zero.
pub fn one_sample_chi_square(values: &[f64], mean: f64) -> f64 {
    if mean.abs() <= EPS {
        return 0.0;
    }
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / mean
}

#[derive(Debug, Clone, Copy)]
pub struct WindowConfig {
    pub window_seconds: f64,
    pub overlap_fraction: f64,
    pub feature_set: FeatureSet,
    /// Quantile levels emitted by the tactile set.
    pub tactile_quantiles: [f64; 4],
    pub chi_square: ChiSquareFn,
    /// Trailing horizon for the stability baseline.
    pub history_horizon_s: f64,
}

impl WindowConfig {
    pub fn new(window_seconds: f64, overlap_fraction: f64, feature_set: FeatureSet) -> Result<Self> {
        let cfg = Self {
            window_seconds,
            overlap_fraction,
            feature_set,
            tactile_quantiles: [0.10, 0.25, 0.76, 0.90],
            chi_square: one_sample_chi_square,
            history_horizon_s: DEFAULT_HORIZON_S,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.window_seconds > 0.0 && self.window_seconds.is_finite()) {
            return Err(Error::InvalidConfig("window_seconds must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig("overlap_fraction must lie in [0, 1)".into()));
        }
        if self.history_horizon_s <= self.window_seconds {
            return Err(Error::InvalidConfig(
                "history horizon must exceed the window length".into(),
            ));
        }
        Ok(())
    }

    pub fn stride_seconds(&self) -> f64 {
        self.window_seconds * (1.0 - self.overlap_fraction)
    }

    /// Number of windows a series of `series_seconds` yields.
    pub fn window_count(&self, series_seconds: f64) -> usize {
        if series_seconds + EPS < self.window_seconds {
            return 0;
        }
        ((series_seconds - self.window_seconds) / self.stride_seconds() + EPS).floor() as usize + 1
    }
}

/// A window over one series, borrowing its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Window<'a> {
    pub series_id: &'a str,
    pub start_s: f64,
    pub end_s: f64,
    pub start_index: usize,
    pub channels: Vec<(&'a str, &'a [f64])>,
    pub label: &'a str,
}

impl Window<'_> {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |(_, s)| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn slide_windows<'a>(series: &'a RawSeries, cfg: &WindowConfig) -> Result<Vec<Window<'a>>> {
    cfg.validate()?;
    series.validate()?;
    let total_s = series.duration_seconds();
    let count = cfg.window_count(total_s);
    if count == 0 {
        return Err(Error::SeriesShorterThanWindow {
            series_seconds: total_s,
            window_seconds: cfg.window_seconds,
        });
    }
    let rate = series.sample_rate_hz;
    let win_len = (cfg.window_seconds * rate).round() as usize;
    if win_len < 2 {
        return Err(Error::InvalidConfig(format!(
            "window of {}s holds fewer than 2 samples at {rate} Hz",
            cfg.window_seconds
        )));
    }
    let n = series.len();
    let stride = cfg.stride_seconds();
    Ok((0..count)
        .map(|k| {
            let start_s = k as f64 * stride;
            // Rounding can push the final window one sample past the end.
            let start_index = ((start_s * rate).round() as usize).min(n - win_len);
            Window {
                series_id: &series.series_id,
                start_s,
                end_s: start_s + cfg.window_seconds,
                start_index,
                channels: series
                    .channels
                    .iter()
                    .map(|c| {
                        (
                            c.name.as_str(),
                            &c.samples[start_index..start_index + win_len],
                        )
                    })
                    .collect(),
                label: &series.label,
            }
        })
        .collect())
}

/// Trailing per-channel means preceding a window.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryContext {
    pub horizon_seconds: f64,
    /// `None` when no sample precedes the window.
    pub trailing_means: Vec<Option<f64>>,
}

impl HistoryContext {
    /// Mean of each channel over the samples within `horizon_seconds`
    /// before `start_index`.
    pub fn preceding(series: &RawSeries, start_index: usize, horizon_seconds: f64) -> Self {
        let span = (horizon_seconds * series.sample_rate_hz).round() as usize;
        let from = start_index.saturating_sub(span);
        let trailing_means = series
            .channels
            .iter()
            .map(|c| {
                let slice = &c.samples[from..start_index];
                (!slice.is_empty()).then(|| slice.iter().sum::<f64>() / slice.len() as f64)
            })
            .collect();
        Self {
            horizon_seconds,
            trailing_means,
        }
    }
}

/// Linear interpolation between order statistics of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct Moments {
    mean: f64,
    /// central moments with divisor n
    m2: f64,
    m3: f64,
    m4: f64,
    sample_var: f64,
    flat: bool,
}

fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let m2 = s2 / n;
    Moments {
        mean,
        m2,
        m3: s3 / n,
        m4: s4 / n,
        sample_var: s2 / (n - 1.0),
        flat: m2.sqrt() <= 1e-12 * scale,
    }
}

fn channel_features(
    values: &[f64],
    cfg: &WindowConfig,
    trailing_mean: Option<f64>,
    out: &mut Vec<f64>,
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty("empty window slice"));
    }
    if values.len() < 2 {
        return Err(Error::InvalidConfig("window slice needs at least 2 samples".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = moments(values);
    let (skew, kurt) = if m.flat {
        (0.0, 0.0)
    } else {
        (m.m3 / m.m2.powf(1.5), m.m4 / (m.m2 * m.m2) - 3.0)
    };
    let var = if m.flat { 0.0 } else { m.sample_var };
    let std = var.sqrt();
    let median = quantile_sorted(&sorted, 0.5);
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    match cfg.feature_set {
        FeatureSet::Tactile11 => {
            let [a, b, c, d] = cfg.tactile_quantiles.map(|q| quantile_sorted(&sorted, q));
            out.extend_from_slice(&[m.mean, median, var, skew, std, a, b, c, d, min, max]);
        }
        FeatureSet::Fiber12 => {
            let stability = match trailing_mean {
                Some(base) if base.abs() > EPS => m.mean / base,
                _ => 1.0,
            };
            out.extend_from_slice(&[
                m.mean,
                median,
                std,
                var,
                (cfg.chi_square)(values, m.mean),
                quantile_sorted(&sorted, 0.25),
                quantile_sorted(&sorted, 0.75),
                min,
                max,
                kurt,
                skew,
                stability,
            ]);
        }
    }
    Ok(())
}

/// Feature vector for one window, channel blocks concatenated in channel order.
pub fn stats_features(
    win: &Window<'_>,
    cfg: &WindowConfig,
    hist: Option<&HistoryContext>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.feature_set.len() * win.channels.len());
    for (ci, (_, values)) in win.channels.iter().enumerate() {
        let trailing = hist.and_then(|h| h.trailing_means.get(ci).copied().flatten());
        channel_features(values, cfg, trailing, &mut out)?;
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample);
    }
    Ok(out)
}

pub fn feature_names(channels: &[&str], set: FeatureSet) -> Vec<String> {
    channels
        .iter()
        .flat_map(|c| set.names().iter().map(move |f| format!("{c}_{f}")))
        .collect()
}

pub fn featurize_dataset(runs: &[RawSeries], cfg: &WindowConfig) -> Result<FeatureDataset> {
    featurize_with_labels(runs, cfg, None)
}

/// Like [`featurize_dataset`] with an explicit label space; classes otherwise
/// follow first appearance in `runs`.
pub fn featurize_with_labels(
    runs: &[RawSeries],
    cfg: &WindowConfig,
    label_space: Option<LabelSpace>,
) -> Result<FeatureDataset> {
    let first = runs.first().ok_or(Error::Empty("no input series"))?;
    let channels = first.channel_names();
    for run in runs {
        if run.channel_names() != channels {
            return Err(Error::SchemaMismatch(format!(
                "series '{}' has channels {:?}, expected {:?}",
                run.series_id,
                run.channel_names(),
                channels
            )));
        }
        if (run.sample_rate_hz - first.sample_rate_hz).abs() > EPS {
            return Err(Error::SchemaMismatch(format!(
                "series '{}' sampled at {} Hz, expected {} Hz",
                run.series_id, run.sample_rate_hz, first.sample_rate_hz
            )));
        }
    }
    let label_space =
        label_space.unwrap_or_else(|| LabelSpace::from_labels(runs.iter().map(|r| r.label.as_str())));

    let per_run: Vec<Vec<(Vec<f64>, Provenance)>> = runs
        .par_iter()
        .map(|run| -> Result<_> {
            slide_windows(run, cfg)?
                .iter()
                .map(|w| {
                    let hist = (cfg.feature_set == FeatureSet::Fiber12).then(|| {
                        HistoryContext::preceding(run, w.start_index, cfg.history_horizon_s)
                    });
                    let row = stats_features(w, cfg, hist.as_ref())?;
                    Ok((
                        row,
                        Provenance {
                            series_id: run.series_id.clone(),
                            window_start_s: w.start_s,
                            window_end_s: w.end_s,
                        },
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let d = cfg.feature_set.len() * channels.len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut provenance = Vec::new();
    for (run, rows) in runs.iter().zip(per_run) {
        let label = label_space.ordinal(&run.label).ok_or_else(|| {
            Error::SchemaMismatch(format!("label '{}' not in label space", run.label))
        })?;
        for (row, prov) in rows {
            data.extend(row);
            labels.push(label);
            provenance.push(prov);
        }
    }
    let instances = Array2::from_shape_vec((labels.len(), d), data)
        .map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    FeatureDataset::new(
        instances,
        labels,
        label_space,
        feature_names(&channels, cfg.feature_set),
        Some(provenance),
    )
}

/// Per-feature MinMax bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaler(train: &Array2<f64>) -> Result<Scaler> {
    if train.nrows() == 0 || train.ncols() == 0 {
        return Err(Error::Empty("scaler fit matrix is empty"));
    }
    let min = train
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let max = train
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(Scaler { min, max })
}

impl Scaler {
    /// Maps each feature to (x − min)/(max − min); constant features map to 0.
    /// Values outside the fitted range are not clamped.
    pub fn apply(&self, m: &Array2<f64>) -> Result<Array2<f64>> {
        if m.ncols() != self.min.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                got: m.ncols(),
            });
        }
        let mut out = m.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let span = hi - lo;
            col.mapv_inplace(|x| if span > 0.0 { (x - lo) / span } else { 0.0 });
        }
        Ok(out)
    }
}

pub fn apply_scaler(s: &Scaler, m: &Array2<f64>) -> Result<Array2<f64>> {
    s.apply(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Channel;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn series(id: &str, samples: Vec<f64>, rate: f64, label: &str) -> RawSeries {
        RawSeries::new(id, vec![Channel::new("baro", samples)], rate, label).unwrap()
    }

    fn tactile(w: f64, o: f64) -> WindowConfig {
        WindowConfig::new(w, o, FeatureSet::Tactile11).unwrap()
    }

    fn window_of(values: &[f64]) -> Window<'_> {
        Window {
            series_id: "s",
            start_s: 0.0,
            end_s: 1.0,
            start_index: 0,
            channels: vec![("c", values)],
            label: "x",
        }
    }

    #[test]
    fn twelve_seconds_half_overlap() {
        let s = series("a", vec![0.0; 120], 10.0, "x");
        let w = slide_windows(&s, &tactile(6.0, 0.5)).unwrap();
        let starts: Vec<f64> = w.iter().map(|w| w.start_s).collect();
        assert_eq!(starts, vec![0.0, 3.0, 6.0]);
        assert!(w.iter().all(|w| w.len() == 60 && w.label == "x"));
    }

    #[test]
    fn twelve_seconds_no_overlap() {
        let s = series("a", vec![0.0; 120], 10.0, "x");
        let w = slide_windows(&s, &tactile(6.0, 0.0)).unwrap();
        assert_eq!(w.iter().map(|w| w.start_s).collect::<Vec<_>>(), vec![0.0, 6.0]);
    }

    #[test]
    fn short_series_rejected() {
        let s = series("a", vec![0.0; 50], 10.0, "x");
        assert!(matches!(
            slide_windows(&s, &tactile(6.0, 0.5)),
            Err(Error::SeriesShorterThanWindow { .. })
        ));
    }

    #[test]
    fn constant_window() {
        let v = [5.0; 4];
        let f = stats_features(&window_of(&v), &tactile(1.0, 0.5), None).unwrap();
        assert_eq!(f, vec![5.0, 5.0, 0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0]);
    }

    #[test]
    fn ramp_window() {
        let v = [0.0, 1.0, 2.0, 3.0];
        let f = stats_features(&window_of(&v), &tactile(1.0, 0.5), None).unwrap();
        assert_abs_diff_eq!(f[0], 1.5);
        assert_abs_diff_eq!(f[1], 1.5);
        assert_abs_diff_eq!(f[9], 0.0);
        assert_abs_diff_eq!(f[10], 3.0);
        assert_abs_diff_eq!(f[4], 1.290994, epsilon = 1e-6);
    }

    #[test]
    fn stability_ratio() {
        let v = [3.0, 5.0, 4.0, 4.0];
        let cfg = WindowConfig::new(1.0, 0.5, FeatureSet::Fiber12).unwrap();
        let hist = HistoryContext {
            horizon_seconds: 86400.0,
            trailing_means: vec![Some(2.0)],
        };
        let f = stats_features(&window_of(&v), &cfg, Some(&hist)).unwrap();
        assert_abs_diff_eq!(f[11], 2.0);
    }

    #[test]
    fn stability_without_history_is_neutral() {
        let v = [3.0, 5.0, 4.0, 4.0];
        let cfg = WindowConfig::new(1.0, 0.5, FeatureSet::Fiber12).unwrap();
        let f = stats_features(&window_of(&v), &cfg, None).unwrap();
        assert_eq!(f[11], 1.0);
        let hist = HistoryContext {
            horizon_seconds: 86400.0,
            trailing_means: vec![Some(0.0)],
        };
        let f = stats_features(&window_of(&v), &cfg, Some(&hist)).unwrap();
        assert_eq!(f[11], 1.0);
    }

    #[test]
    fn history_uses_preceding_samples() {
        let s = series("a", vec![2.0, 2.0, 2.0, 2.0, 4.0, 4.0], 1.0, "x");
        let h = HistoryContext::preceding(&s, 4, 86400.0);
        assert_eq!(h.trailing_means, vec![Some(2.0)]);
        let h = HistoryContext::preceding(&s, 0, 86400.0);
        assert_eq!(h.trailing_means, vec![None]);
    }

    #[test]
    fn non_finite_sample_rejected() {
        let v = [1.0, f64::NAN, 2.0];
        assert_eq!(
            stats_features(&window_of(&v), &tactile(1.0, 0.5), None),
            Err(Error::NonFiniteSample)
        );
    }

    #[test]
    fn empty_slice_rejected() {
        let v: [f64; 0] = [];
        assert!(stats_features(&window_of(&v), &tactile(1.0, 0.5), None).is_err());
    }

    #[test]
    fn dataset_is_run_major() {
        let runs = vec![
            series("r1", (0..120).map(f64::from).collect(), 10.0, "a"),
            series("r2", (0..120).map(|i| -f64::from(i)).collect(), 10.0, "b"),
        ];
        let ds = featurize_dataset(&runs, &tactile(6.0, 0.5)).unwrap();
        assert_eq!(ds.len(), 6);
        assert_eq!(ds.n_features(), 11);
        assert_eq!(ds.labels, vec![0, 0, 0, 1, 1, 1]);
        let prov = ds.provenance.as_ref().unwrap();
        assert_eq!(prov[3].series_id, "r2");
        assert_eq!(prov[4].window_start_s, 3.0);
    }

    #[test]
    fn fiber_set_on_four_channels_has_48_features() {
        let ch = |n: &str, o: f64| Channel::new(n, (0..50).map(|i| o + (i as f64).sin()).collect());
        let run = RawSeries::new(
            "r",
            vec![
                ch("magnitude", 10.0),
                ch("phase", 2.0),
                ch("node_quality", 5.0),
                ch("node_count", 3.0),
            ],
            5.0,
            "crossover",
        )
        .unwrap();
        let cfg = WindowConfig::new(2.0, 0.5, FeatureSet::Fiber12).unwrap();
        let ds = featurize_dataset(&[run], &cfg).unwrap();
        assert_eq!(ds.n_features(), 48);
        assert_eq!(ds.feature_names[12], "phase_mean");
    }

    #[test]
    fn empty_run_list() {
        assert_eq!(
            featurize_dataset(&[], &tactile(6.0, 0.5)),
            Err(Error::Empty("no input series"))
        );
    }

    #[test]
    fn mixed_schema_rejected() {
        let a = series("a", vec![0.0; 100], 10.0, "x");
        let mut b = series("b", vec![0.0; 100], 10.0, "y");
        b.channels[0].name = "other".into();
        assert!(matches!(
            featurize_dataset(&[a, b], &tactile(6.0, 0.5)),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn scaler_examples() {
        let s = fit_scaler(&array![[2.0], [4.0], [6.0]]).unwrap();
        let out = s.apply(&array![[4.0], [2.0], [6.0], [8.0]]).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.5, 0.0, 1.0, 1.5]);
        let c = fit_scaler(&array![[3.0], [3.0]]).unwrap();
        assert_eq!(c.apply(&array![[3.0]]).unwrap()[[0, 0]], 0.0);
        assert!(matches!(
            s.apply(&array![[1.0, 2.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scaler_out_of_range() {
        let s = fit_scaler(&array![[2.0], [6.0]]).unwrap();
        assert_eq!(s.apply(&array![[8.0]]).unwrap()[[0, 0]], 1.5);
    }

    // Independent recomputation: sort-based quantiles, plain moment sums.
    fn naive_tactile(v: &[f64]) -> Vec<f64> {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| {
            let pos = p * (n - 1.0);
            let i = pos as usize;
            if i + 1 >= s.len() {
                s[s.len() - 1]
            } else {
                s[i] * (1.0 - (pos - i as f64)) + s[i + 1] * (pos - i as f64)
            }
        };
        let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = v.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let skew = if m2 == 0.0 { 0.0 } else { m3 / m2.sqrt().powi(3) };
        vec![
            mean,
            q(0.5),
            var,
            skew,
            var.sqrt(),
            q(0.10),
            q(0.25),
            q(0.76),
            q(0.90),
            s[0],
            s[s.len() - 1],
        ]
    }

    fn brute_force_count(total: f64, w: f64, stride: f64) -> usize {
        (0..)
            .take_while(|&k| k as f64 * stride + w <= total + 1e-9)
            .count()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn window_count_matches_enumeration(
            total in 1.0f64..60.0, w in 0.5f64..20.0, o in 0.0f64..0.9
        ) {
            let cfg = tactile(w, o);
            prop_assert_eq!(cfg.window_count(total), brute_force_count(total, w, cfg.stride_seconds()));
        }

        #[test]
        fn sliding_windows_carry_label(
            n in 40usize..400, w in 1.0f64..4.0, o in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75])
        ) {
            let s = series("s", (0..n).map(|i| i as f64).collect(), 10.0, "lbl");
            let cfg = tactile(w, o);
            let windows = slide_windows(&s, &cfg).unwrap();
            prop_assert_eq!(windows.len(), brute_force_count(n as f64 / 10.0, w, cfg.stride_seconds()));
            for win in &windows {
                prop_assert_eq!(win.label, "lbl");
                prop_assert!(win.start_index + win.len() <= n);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn tactile_matches_naive(v in prop::collection::vec(-100.0f64..100.0, 2..200)) {
            let f = stats_features(&window_of(&v), &tactile(1.0, 0.5), None).unwrap();
            let g = naive_tactile(&v);
            for (a, b) in f.iter().zip(&g) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{} vs {}", a, b);
            }
            // order statistics are monotone
            let ordered = [f[9], f[5], f[6], f[1], f[7], f[8], f[10]];
            prop_assert!(ordered.windows(2).all(|p| p[0] <= p[1]));
        }

        #[test]
        fn scaler_on_fit_matrix_is_unit_box(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..40)
        ) {
            let m = Array2::from_shape_vec((rows.len(), 3), rows.concat()).unwrap();
            let s = fit_scaler(&m).unwrap();
            let out = s.apply(&m).unwrap();
            prop_assert!(out.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
