//! F1 scores from a confusion matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How classes that appear in neither `y_true` nor `y_pred` enter the
/// macro average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsentClasses {
    #[default]
    Exclude,
    CountAsZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Macro,
    Micro,
    Weighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub macro_f1: f64,
    /// Length K. Classes excluded from the average report 0.
    pub per_class: Vec<f64>,
    /// Whether each class took part in the macro average.
    pub counted: Vec<bool>,
    pub support: Vec<usize>,
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Empty("no labels to score"));
    }
    let mut cm = vec![vec![0usize; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::LabelOutOfRange {
                label: t.max(p),
                n_classes: k,
            });
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

pub fn macro_f1(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<F1Report> {
    macro_f1_with(y_true, y_pred, k, AbsentClasses::Exclude)
}

pub fn macro_f1_with(
    y_true: &[usize],
    y_pred: &[usize],
    k: usize,
    absent: AbsentClasses,
) -> Result<F1Report> {
    let cm = confusion_matrix(y_true, y_pred, k)?;
    let mut per_class = vec![0.0; k];
    let mut counted = vec![false; k];
    let mut support = vec![0; k];
    for c in 0..k {
        let tp = cm[c][c] as f64;
        let actual: usize = cm[c].iter().sum();
        let predicted: usize = cm.iter().map(|row| row[c]).sum();
        support[c] = actual;
        counted[c] = actual + predicted > 0 || absent == AbsentClasses::CountAsZero;
        // 2PR/(P+R) = 2tp/(actual + predicted)
        if actual + predicted > 0 {
            per_class[c] = 2.0 * tp / (actual + predicted) as f64;
        }
    }
    let n_counted = counted.iter().filter(|&&c| c).count();
    let macro_f1 = per_class
        .iter()
        .zip(&counted)
        .filter(|(_, &c)| c)
        .map(|(f, _)| f)
        .sum::<f64>()
        / n_counted as f64;
    Ok(F1Report {
        macro_f1,
        per_class,
        counted,
        support,
    })
}

pub fn f1_score(y_true: &[usize], y_pred: &[usize], k: usize, avg: Averaging) -> Result<f64> {
    let report = macro_f1(y_true, y_pred, k)?;
    Ok(match avg {
        Averaging::Macro => report.macro_f1,
        // single-label multiclass: micro F1 equals accuracy
        Averaging::Micro => {
            y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count() as f64 / y_true.len() as f64
        }
        Averaging::Weighted => {
            report
                .per_class
                .iter()
                .zip(&report.support)
                .map(|(f, &s)| f * s as f64)
                .sum::<f64>()
                / y_true.len() as f64
        }
    })
}
