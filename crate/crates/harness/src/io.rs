//! CSV formats.
//!
//! Raw series are stored long-format, one row per sample:
//!
//! ```text
//! series_id,label,magnitude,phase
//! run-01,crossover,0.31,1.20
//! run-01,crossover,0.29,1.18
//! ```
//!
//! Feature files carry one row per window plus a leading comment that pins
//! the label-space order:
//!
//! ```text
//! # alloom-features v1 label_space=["crossover","entanglement"]
//! instance_id,series_id,window_start_s,window_end_s,label,magnitude_mean,...
//! ```

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use alloom_core::{Channel, FeatureDataset, LabelSpace, Provenance, RawSeries};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const FEATURE_MAGIC: &str = "# alloom-features v1";
const PROVENANCE_COLUMNS: [&str; 5] = ["instance_id", "series_id", "window_start_s", "window_end_s", "label"];

/// Column layout of a raw series file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSchema {
    #[serde(default = "default_id_column")]
    pub id_column: String,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// Channel columns in order; every other column when empty.
    #[serde(default)]
    pub channels: Vec<String>,
    pub sample_rate_hz: f64,
    /// Optional column holding each series' start timestamp in seconds.
    #[serde(default)]
    pub t0_column: Option<String>,
}

fn default_id_column() -> String {
    "series_id".into()
}

fn default_label_column() -> String {
    "label".into()
}

impl RawSchema {
    pub fn new(sample_rate_hz: f64) -> Self {
        Self {
            id_column: default_id_column(),
            label_column: default_label_column(),
            channels: Vec::new(),
            sample_rate_hz,
            t0_column: None,
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| HarnessError::io(path, e))
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path).map_err(|e| HarnessError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::io(path, io),
        other => HarnessError::invalid(format!("{}: {other:?}", path.display())),
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| HarnessError::invalid(format!("column '{name}' not found")))
}

/// Strict finite float parse; `row` is the 1-based data row for messages.
fn parse_cell(cell: &str, row: usize, col: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(HarnessError::invalid(format!(
            "row {row}: non-numeric value '{cell}' in column '{col}'"
        ))),
    }
}

pub fn load_raw_series_csv(path: &Path, schema: &RawSchema) -> Result<Vec<RawSeries>> {
    read_raw_series(open(path)?, schema).map_err(|e| match e {
        HarnessError::Invalid(msg) => HarnessError::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// One series per distinct id, in order of first appearance; samples keep
/// file order.
pub fn read_raw_series<R: Read>(input: R, schema: &RawSchema) -> Result<Vec<RawSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| HarnessError::invalid(e.to_string()))?
        .clone();
    let id_col = column(&headers, &schema.id_column)?;
    let label_col = column(&headers, &schema.label_column)?;
    let t0_col = schema.t0_column.as_deref().map(|c| column(&headers, c)).transpose()?;
    let channel_names: Vec<String> = if schema.channels.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != id_col && *i != label_col && Some(*i) != t0_col)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        schema.channels.clone()
    };
    if channel_names.is_empty() {
        return Err(HarnessError::invalid("no channel columns"));
    }
    let channel_cols: Vec<usize> = channel_names
        .iter()
        .map(|c| column(&headers, c))
        .collect::<Result<_>>()?;

    struct Acc {
        label: String,
        t0: Option<f64>,
        samples: Vec<Vec<f64>>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, Acc> = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| HarnessError::invalid(format!("row {row}: {e}")))?;
        let id = &rec[id_col];
        let label = &rec[label_col];
        let t0 = t0_col
            .map(|c| parse_cell(&rec[c], row, &headers[c]))
            .transpose()?;
        let acc = match by_id.get_mut(id) {
            Some(acc) => {
                if acc.label != label {
                    return Err(HarnessError::invalid(format!(
                        "row {row}: series '{id}' changes label from '{}' to '{label}'",
                        acc.label
                    )));
                }
                acc
            }
            None => {
                order.push(id.to_string());
                by_id.entry(id.to_string()).or_insert(Acc {
                    label: label.to_string(),
                    t0,
                    samples: vec![Vec::new(); channel_cols.len()],
                })
            }
        };
        for (k, &c) in channel_cols.iter().enumerate() {
            acc.samples[k].push(parse_cell(&rec[c], row, &headers[c])?);
        }
    }
    if order.is_empty() {
        return Err(HarnessError::invalid("no samples"));
    }
    order
        .into_iter()
        .map(|id| {
            let acc = by_id.remove(&id).expect("id recorded on first sight");
            let channels = channel_names
                .iter()
                .zip(acc.samples)
                .map(|(n, s)| Channel::new(n.clone(), s))
                .collect();
            let mut series = RawSeries::new(id, channels, schema.sample_rate_hz, acc.label)?;
            series.t0 = acc.t0;
            Ok(series)
        })
        .collect()
}

pub fn save_raw_series_csv(path: &Path, series: &[RawSeries]) -> Result<()> {
    write_raw_series(create(path)?, series).map_err(|e| match e {
        HarnessError::Io { source, .. } => HarnessError::io(path, source),
        other => other,
    })
}

pub fn write_raw_series<W: Write>(out: W, series: &[RawSeries]) -> Result<()> {
    let first = series.first().ok_or_else(|| HarnessError::invalid("no series to write"))?;
    let names = first.channel_names();
    let with_t0 = series.iter().any(|s| s.t0.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["series_id", "label"];
    if with_t0 {
        header.push("t0");
    }
    header.extend(names.iter().copied());
    w.write_record(&header).map_err(|e| csv_err(Path::new("-"), e))?;
    for s in series {
        if s.channel_names() != names {
            return Err(HarnessError::invalid(format!("series '{}' has different channels", s.series_id)));
        }
        for i in 0..s.len() {
            let mut rec = vec![s.series_id.clone(), s.label.clone()];
            if with_t0 {
                rec.push(s.t0.map(fmt_float).unwrap_or_default());
            }
            rec.extend(s.channels.iter().map(|c| fmt_float(c.samples[i])));
            w.write_record(&rec).map_err(|e| csv_err(Path::new("-"), e))?;
        }
    }
    w.flush().map_err(|e| HarnessError::io("-", e))
}

/// 17 significant digits: exact round-trip for every finite f64.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn save_feature_csv(path: &Path, ds: &FeatureDataset) -> Result<()> {
    let ids: Vec<usize> = (0..ds.len()).collect();
    write_feature_csv(create(path)?, ds, &ids).map_err(|e| match e {
        HarnessError::Io { source, .. } => HarnessError::io(path, source),
        other => other,
    })
}

/// Writes `ds` with explicit instance ids, one per row.
pub fn write_feature_csv<W: Write>(mut out: W, ds: &FeatureDataset, ids: &[usize]) -> Result<()> {
    if ids.len() != ds.len() {
        return Err(HarnessError::invalid(format!("{} ids for {} instances", ids.len(), ds.len())));
    }
    let classes = serde_json::to_string(ds.label_space.classes()).expect("strings serialize");
    writeln!(out, "{FEATURE_MAGIC} label_space={classes}").map_err(|e| HarnessError::io("-", e))?;
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<&str> = PROVENANCE_COLUMNS
        .iter()
        .copied()
        .chain(ds.feature_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header).map_err(|e| csv_err(Path::new("-"), e))?;
    for (r, &id) in ids.iter().enumerate() {
        let mut rec = vec![id.to_string()];
        match ds.provenance.as_ref().map(|p| &p[r]) {
            Some(p) => rec.extend([
                p.series_id.clone(),
                fmt_float(p.window_start_s),
                fmt_float(p.window_end_s),
            ]),
            None => rec.extend([String::new(), String::new(), String::new()]),
        }
        rec.push(ds.label_space.name(ds.labels[r]).expect("validated label").to_string());
        rec.extend(ds.instances.row(r).iter().map(|&v| fmt_float(v)));
        w.write_record(&rec).map_err(|e| csv_err(Path::new("-"), e))?;
    }
    w.flush().map_err(|e| HarnessError::io("-", e))
}

pub fn load_feature_csv(path: &Path) -> Result<FeatureDataset> {
    load_feature_csv_with_ids(path).map(|(ds, _)| ds)
}

pub fn load_feature_csv_with_ids(path: &Path) -> Result<(FeatureDataset, Vec<usize>)> {
    read_feature_csv(open(path)?).map_err(|e| match e {
        HarnessError::Invalid(msg) => HarnessError::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses a feature file; also returns the instance id of each row.
pub fn read_feature_csv<R: Read>(input: R) -> Result<(FeatureDataset, Vec<usize>)> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| HarnessError::io("-", e))?;
    let mut label_space = None;
    let body: Box<dyn Read> = if let Some(rest) = first.trim_end().strip_prefix(FEATURE_MAGIC) {
        let json = rest
            .trim()
            .strip_prefix("label_space=")
            .ok_or_else(|| HarnessError::invalid("malformed feature header"))?;
        let classes: Vec<String> = serde_json::from_str(json)
            .map_err(|e| HarnessError::invalid(format!("malformed label space: {e}")))?;
        label_space = Some(LabelSpace::new(classes)?);
        Box::new(reader)
    } else {
        Box::new(std::io::Cursor::new(first.into_bytes()).chain(reader))
    };

    let mut rdr = csv::ReaderBuilder::new().from_reader(body);
    let headers = match rdr.headers() {
        Ok(h) if !h.is_empty() && !(h.len() == 1 && h[0].is_empty()) => h.clone(),
        _ => return Err(HarnessError::invalid("no instances")),
    };
    for (i, name) in PROVENANCE_COLUMNS.iter().enumerate() {
        if headers.get(i) != Some(*name) {
            return Err(HarnessError::invalid(format!("column '{name}' not found")));
        }
    }
    let feature_names: Vec<String> = headers.iter().skip(PROVENANCE_COLUMNS.len()).map(String::from).collect();
    if feature_names.is_empty() {
        return Err(HarnessError::invalid("no feature columns"));
    }

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut label_names = Vec::new();
    let mut provenance = Vec::new();
    let mut any_provenance = false;
    let mut data = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| HarnessError::invalid(format!("row {row}: {e}")))?;
        let id: usize = rec[0]
            .parse()
            .map_err(|_| HarnessError::invalid(format!("row {row}: bad instance id '{}'", &rec[0])))?;
        if !seen.insert(id) {
            return Err(HarnessError::invalid(format!("duplicate instance id {id}")));
        }
        ids.push(id);
        if rec[1].is_empty() {
            provenance.push(None);
        } else {
            any_provenance = true;
            provenance.push(Some(Provenance {
                series_id: rec[1].to_string(),
                window_start_s: parse_cell(&rec[2], row, PROVENANCE_COLUMNS[2])?,
                window_end_s: parse_cell(&rec[3], row, PROVENANCE_COLUMNS[3])?,
            }));
        }
        label_names.push(rec[4].to_string());
        for (c, cell) in rec.iter().enumerate().skip(PROVENANCE_COLUMNS.len()) {
            data.push(parse_cell(cell, row, &headers[c])?);
        }
    }
    if ids.is_empty() {
        return Err(HarnessError::invalid("no instances"));
    }
    let label_space = label_space.unwrap_or_else(|| LabelSpace::from_labels(label_names.iter().map(String::as_str)));
    let labels = label_names
        .iter()
        .enumerate()
        .map(|(i, l)| {
            label_space
                .ordinal(l)
                .ok_or_else(|| HarnessError::invalid(format!("row {}: label '{l}' not in label space", i + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = if any_provenance {
        Some(
            provenance
                .into_iter()
                .enumerate()
                .map(|(i, p)| p.ok_or_else(|| HarnessError::invalid(format!("row {}: missing provenance", i + 1))))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    let instances = Array2::from_shape_vec((ids.len(), feature_names.len()), data)
        .map_err(|e| HarnessError::invalid(e.to_string()))?;
    Ok((
        FeatureDataset::new(instances, labels, label_space, feature_names, provenance)?,
        ids,
    ))
}
