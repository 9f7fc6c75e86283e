use crate::error::{Error, Result};

/// `n_classes × n_classes` counts, rows are true labels.
pub fn confusion_matrix(
    predictions: &[usize],
    labels: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<u64>>> {
    if predictions.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Metric("no samples".into()));
    }
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::Metric(format!(
                "class ({l}, {p}) out of range for {n_classes} classes"
            )));
        }
        m[l][p] += 1;
    }
    Ok(m)
}

/// Unweighted mean of per-class F1 over the classes that occur in either
/// `labels` or `predictions`. A class with `2TP + FP + FN = 0` scores 0.
pub fn macro_f1(predictions: &[usize], labels: &[usize], n_classes: usize) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Metric("no samples".into()));
    }
    let mut tp = vec![0u64; n_classes];
    let mut fp = vec![0u64; n_classes];
    let mut fn_ = vec![0u64; n_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= n_classes || l >= n_classes {
            return Err(Error::Metric(format!(
                "class ({l}, {p}) out of range for {n_classes} classes"
            )));
        }
        if p == l {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..n_classes {
        let denom = 2 * tp[c] + fp[c] + fn_[c];
        if denom == 0 {
            continue;
        }
        present += 1;
        sum += (2 * tp[c]) as f64 / denom as f64;
    }
    Ok(sum / present as f64)
}
