//! Classification and uncertainty metrics.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub const HISTOGRAM_BINS: usize = 20;

/// Accuracy and macro-averaged F1 over `num_classes` classes.
///
/// A class with no predictions and no instances scores F1 = 0.
pub fn accuracy_and_macro_f1(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<(f64, f64)> {
    check_len(labels.len(), preds.len())?;
    if preds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(c) = preds.iter().chain(labels).find(|c| **c >= num_classes) {
        return Err(Error::Label(format!("class {c} out of range for {num_classes} classes")));
    }
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut actual = vec![0usize; num_classes];
    for (&p, &y) in preds.iter().zip(labels) {
        predicted[p] += 1;
        actual[y] += 1;
        if p == y {
            tp[p] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let f1_sum: f64 = (0..num_classes)
        .map(|k| {
            let denom = predicted[k] + actual[k];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[k] as f64 / denom as f64
            }
        })
        .sum();
    Ok((correct as f64 / preds.len() as f64, f1_sum / num_classes as f64))
}

/// Per-class number of samples whose uncertainty is at most `threshold`.
pub fn credible_count(us: &[f64], labels: &[usize], num_classes: usize, threshold: f64) -> Result<Vec<usize>> {
    check_len(us.len(), labels.len())?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::domain(format!("credibility threshold must lie in (0, 1], got {threshold}")));
    }
    let mut counts = vec![0usize; num_classes];
    for (&u, &y) in us.iter().zip(labels) {
        if y >= num_classes {
            return Err(Error::Label(format!("class {y} out of range for {num_classes} classes")));
        }
        if u <= threshold {
            counts[y] += 1;
        }
    }
    Ok(counts)
}

/// Mean relative deviation `(1/K) Σ |n_k − m_k| / m_k` of counts from a
/// reference.
pub fn average_relative_error(counts: &[f64], reference: &[f64]) -> Result<f64> {
    check_len(reference.len(), counts.len())?;
    if counts.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if reference.iter().any(|m| m.is_nan() || *m <= 0.0) {
        return Err(Error::domain("reference counts must be positive"));
    }
    let total: f64 = counts.iter().zip(reference).map(|(n, m)| (n - m).abs() / m).sum();
    Ok(total / counts.len() as f64)
}

/// Counts of uncertainties in 20 right-closed bins over [0, 1]; the first
/// bin also holds u = 0.
pub fn uncertainty_histogram(us: &[f64]) -> Vec<usize> {
    let mut bins = vec![0usize; HISTOGRAM_BINS];
    for &u in us {
        let idx = ((u * HISTOGRAM_BINS as f64).ceil() as isize - 1).clamp(0, HISTOGRAM_BINS as isize - 1);
        bins[idx as usize] += 1;
    }
    bins
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub mean_u: f64,
    pub mean_u_degraded: f64,
    pub mean_u_clean: f64,
    pub credible_threshold: f64,
    pub credible_counts: Vec<usize>,
    pub class_totals: Vec<usize>,
    pub histogram: Vec<usize>,
}

impl EvalReport {
    /// `degraded[i]` marks samples whose input was corrupted.
    pub fn new(
        preds: &[usize],
        labels: &[usize],
        us: &[f64],
        degraded: &[bool],
        num_classes: usize,
        threshold: f64,
    ) -> Result<Self> {
        check_len(labels.len(), us.len())?;
        check_len(labels.len(), degraded.len())?;
        let (accuracy, macro_f1) = accuracy_and_macro_f1(preds, labels, num_classes)?;
        let credible_counts = credible_count(us, labels, num_classes, threshold)?;
        let mut class_totals = vec![0usize; num_classes];
        for &y in labels {
            class_totals[y] += 1;
        }
        let pick = |flag: bool| us.iter().zip(degraded).filter(move |(_, d)| **d == flag).map(|(u, _)| *u);
        Ok(EvalReport {
            accuracy,
            macro_f1,
            mean_u: mean(us.iter().copied()),
            mean_u_degraded: mean(pick(true)),
            mean_u_clean: mean(pick(false)),
            credible_threshold: threshold,
            credible_counts,
            class_totals,
            histogram: uncertainty_histogram(us),
        })
    }

    /// Flat `metric,index,value` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,index,value\n");
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("macro_f1", self.macro_f1),
            ("mean_u", self.mean_u),
            ("mean_u_degraded", self.mean_u_degraded),
            ("mean_u_clean", self.mean_u_clean),
            ("credible_threshold", self.credible_threshold),
        ] {
            out.push_str(&format!("{name},,{v}\n"));
        }
        for (k, c) in self.credible_counts.iter().enumerate() {
            out.push_str(&format!("credible_count,{k},{c}\n"));
        }
        for (k, c) in self.class_totals.iter().enumerate() {
            out.push_str(&format!("class_total,{k},{c}\n"));
        }
        for (i, c) in self.histogram.iter().enumerate() {
            out.push_str(&format!("histogram,{i},{c}\n"));
        }
        out
    }
}
