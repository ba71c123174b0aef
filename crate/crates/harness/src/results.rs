//! Long-format results table: one row per (run, step).

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use alloom_core::engine::RunRecord;

use crate::error::{HarnessError, Result};

pub const RESULTS_MAGIC: &str = "# alloom-results v1";
pub const RESULTS_HEADER: [&str; 11] = [
    "seed",
    "step",
    "labeled_count",
    "strategy",
    "balanced",
    "model",
    "window_s",
    "overlap",
    "macro_f1",
    "per_class_f1",
    "elapsed_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub step: usize,
    pub labeled_count: usize,
    pub strategy: String,
    pub balanced: bool,
    pub model: String,
    pub window_s: Option<f64>,
    pub overlap: Option<f64>,
    pub macro_f1: Option<f64>,
    pub per_class_f1: Option<Vec<f64>>,
    pub elapsed_ms: u64,
}

impl ResultRow {
    /// Value of a named column as written to the table.
    pub fn field(&self, name: &str) -> Option<String> {
        Some(match name {
            "seed" => self.seed.to_string(),
            "step" => self.step.to_string(),
            "labeled_count" => self.labeled_count.to_string(),
            "strategy" => self.strategy.clone(),
            "balanced" => self.balanced.to_string(),
            "model" => self.model.clone(),
            "window_s" => opt(self.window_s),
            "overlap" => opt(self.overlap),
            "macro_f1" => opt(self.macro_f1),
            "per_class_f1" => join(self.per_class_f1.as_deref()),
            "elapsed_ms" => self.elapsed_ms.to_string(),
            _ => return None,
        })
    }

    fn record(&self) -> Vec<String> {
        RESULTS_HEADER.iter().map(|h| self.field(h).expect("known column")).collect()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn join(v: Option<&[f64]>) -> String {
    v.map(|v| v.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
        .unwrap_or_default()
}

/// Run-level labels shared by every row of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabels {
    pub strategy: String,
    pub balanced: bool,
    pub model: String,
    pub window_s: Option<f64>,
    pub overlap: Option<f64>,
}

pub fn rows_for(record: &RunRecord, labels: &RunLabels, timing: bool) -> Vec<ResultRow> {
    record
        .steps
        .iter()
        .enumerate()
        .map(|(step, e)| ResultRow {
            seed: record.seed,
            step,
            labeled_count: e.labeled_count,
            strategy: labels.strategy.clone(),
            balanced: labels.balanced,
            model: labels.model.clone(),
            window_s: labels.window_s,
            overlap: labels.overlap,
            macro_f1: e.macro_f1,
            per_class_f1: e.per_class_f1.clone(),
            elapsed_ms: if timing { e.elapsed_ms } else { 0 },
        })
        .collect()
}

pub fn write_results<W: Write>(mut out: W, rows: &[ResultRow]) -> Result<()> {
    writeln!(out, "{RESULTS_MAGIC}").map_err(|e| HarnessError::io("-", e))?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HarnessError::invalid(e.to_string());
    w.write_record(RESULTS_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r.record()).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io("-", e))
}

pub fn results_to_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_results(&mut buf, rows).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 output")
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRow>> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_results(file).map_err(|e| match e {
        HarnessError::Invalid(msg) => HarnessError::invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| HarnessError::io("-", e))?;
    if first.trim_end() != RESULTS_MAGIC {
        return Err(HarnessError::invalid(format!("not a results table (expected '{RESULTS_MAGIC}')")));
    }
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(|e| HarnessError::invalid(e.to_string()))?;
    if headers.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(HarnessError::invalid("unexpected results header"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| HarnessError::invalid(format!("row {row}: {e}")))?;
        let bad = |col: &str| HarnessError::invalid(format!("row {row}: bad value in column '{col}'"));
        let int = |c: usize| rec[c].parse::<u64>().map_err(|_| bad(RESULTS_HEADER[c]));
        let float = |c: usize| -> Result<Option<f64>> {
            if rec[c].is_empty() {
                Ok(None)
            } else {
                rec[c].parse().map(Some).map_err(|_| bad(RESULTS_HEADER[c]))
            }
        };
        let per_class = if rec[9].is_empty() {
            None
        } else {
            Some(
                rec[9]
                    .split(';')
                    .map(|v| v.parse::<f64>().map_err(|_| bad("per_class_f1")))
                    .collect::<Result<Vec<_>>>()?,
            )
        };
        rows.push(ResultRow {
            seed: int(0)?,
            step: int(1)? as usize,
            labeled_count: int(2)? as usize,
            strategy: rec[3].to_string(),
            balanced: rec[4].parse().map_err(|_| bad("balanced"))?,
            model: rec[5].to_string(),
            window_s: float(6)?,
            overlap: float(7)?,
            macro_f1: float(8)?,
            per_class_f1: per_class,
            elapsed_ms: int(10)?,
        });
    }
    Ok(rows)
}
