//! Grouped summaries and paired significance tests over a results table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use alloom_core::engine::summary::summarize_values;
use alloom_core::engine::{wilcoxon_signed_rank, StatTestResult};

use crate::error::{HarnessError, Result};
use crate::results::{ResultRow, RESULTS_HEADER};

pub const DEFAULT_GROUP_BY: [&str; 5] = ["strategy", "balanced", "model", "window_s", "overlap"];

fn check_columns(cols: &[String]) -> Result<()> {
    for c in cols {
        if !RESULTS_HEADER.contains(&c.as_str()) {
            return Err(HarnessError::invalid(format!("column '{c}' not found")));
        }
    }
    Ok(())
}

/// Per group: one line per labelled count, then the run-averaged score
/// (each seed's macro-F1 averaged over its steps) as mean ± std.
pub fn summarize_table(rows: &[ResultRow], group_by: &[String]) -> Result<String> {
    check_columns(group_by)?;
    let mut groups: BTreeMap<Vec<String>, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = group_by.iter().map(|c| r.field(c).expect("checked column")).collect();
        groups.entry(key).or_default().push(r);
    }
    let mut out = String::new();
    for (key, members) in groups {
        let title: Vec<String> = group_by.iter().zip(&key).map(|(c, v)| format!("{c}={v}")).collect();
        writeln!(out, "[{}]", title.join(" ")).unwrap();
        let mut by_count: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut by_seed: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for r in &members {
            if let Some(f) = r.macro_f1 {
                by_count.entry(r.labeled_count).or_default().push(f);
                by_seed.entry(r.seed).or_default().push(f);
            }
        }
        if by_count.is_empty() {
            writeln!(out, "  no macro-f1 values").unwrap();
            continue;
        }
        writeln!(out, "  {:>8}  {:>4}  {:>17}  {:>7}", "labeled", "runs", "macro-f1", "median").unwrap();
        for (i, (count, values)) in by_count.iter().enumerate() {
            let s = summarize_values(i, *count, values);
            writeln!(out, "  {:>8}  {:>4}  {:>7.4} ± {:<7.4}  {:>7.4}", count, s.runs, s.mean, s.std, s.median).unwrap();
        }
        let per_seed: Vec<f64> = by_seed.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let s = summarize_values(0, 0, &per_seed);
        writeln!(out, "  {:>8}  {:>4}  {:>7.4} ± {:<7.4}", "all", s.runs, s.mean, s.std).unwrap();
    }
    Ok(out)
}

/// `key=value` pairs separated by commas.
pub fn parse_filter(text: &str) -> Result<Vec<(String, String)>> {
    let pairs: Vec<(String, String)> = text
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| HarnessError::invalid(format!("filter term '{p}' is not key=value")))
        })
        .collect::<Result<_>>()?;
    check_columns(&pairs.iter().map(|(k, _)| k.clone()).collect::<Vec<_>>())?;
    Ok(pairs)
}

fn matches(r: &ResultRow, filter: &[(String, String)]) -> bool {
    filter.iter().all(|(k, v)| r.field(k).as_deref() == Some(v.as_str()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairBy {
    /// One pair per (seed, step).
    SeedStep,
    /// One pair per seed, each side averaged over its steps.
    Seed,
}

impl std::str::FromStr for PairBy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "seed-step" | "seed_step" => Ok(PairBy::SeedStep),
            "seed" => Ok(PairBy::Seed),
            other => Err(HarnessError::invalid(format!("unknown pairing '{other}'"))),
        }
    }
}

/// Paired macro-F1 values of the two selections, aligned on `pair_by`.
pub fn paired_values(
    rows_a: &[ResultRow],
    filter_a: &[(String, String)],
    rows_b: &[ResultRow],
    filter_b: &[(String, String)],
    pair_by: PairBy,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let collect = |rows: &[ResultRow], f: &[(String, String)]| -> Result<BTreeMap<(u64, usize), Vec<f64>>> {
        let mut m: BTreeMap<(u64, usize), Vec<f64>> = BTreeMap::new();
        for r in rows.iter().filter(|r| matches(r, f)) {
            let key = match pair_by {
                PairBy::SeedStep => (r.seed, r.step),
                PairBy::Seed => (r.seed, 0),
            };
            let f1 = r
                .macro_f1
                .ok_or_else(|| HarnessError::invalid("selected rows carry no macro_f1"))?;
            m.entry(key).or_default().push(f1);
        }
        if pair_by == PairBy::SeedStep && m.values().any(|v| v.len() > 1) {
            return Err(HarnessError::invalid(
                "selection matches several runs per (seed, step); narrow the filter",
            ));
        }
        Ok(m)
    };
    let a = collect(rows_a, filter_a)?;
    let b = collect(rows_b, filter_b)?;
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::invalid("a selection matched no rows"));
    }
    if a.keys().ne(b.keys()) {
        return Err(HarnessError::invalid("selections do not cover the same seeds and steps"));
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    Ok((a.values().map(mean).collect(), b.values().map(mean).collect()))
}

pub fn compare(
    rows_a: &[ResultRow],
    filter_a: &[(String, String)],
    rows_b: &[ResultRow],
    filter_b: &[(String, String)],
    pair_by: PairBy,
) -> Result<StatTestResult> {
    let (a, b) = paired_values(rows_a, filter_a, rows_b, filter_b, pair_by)?;
    Ok(wilcoxon_signed_rank(&a, &b)?)
}
