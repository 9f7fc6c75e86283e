use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Row-wise softmax, stabilized by max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for n in 0..out.rows() {
        let row = out.row_mut(n);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean softmax cross-entropy over rows and its gradient `(p - onehot) / N`.
pub fn softmax_cross_entropy(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    if logits.rows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    if logits.rows() == 0 {
        return Err(Error::EmptyInput("cross-entropy over zero samples".into()));
    }
    let classes = logits.cols();
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::Index(format!(
            "label {l} at sample {i} out of range for {classes} classes"
        )));
    }
    let n = logits.rows() as f64;
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_sum = sum.ln();
        loss += log_sum - (row[label] - max);
        let g = grad.row_mut(i);
        for (k, v) in row.iter().enumerate() {
            g[k] = (v - max).exp() / sum / n;
        }
        g[label] -= 1.0 / n;
    }
    Ok((loss / n, grad))
}
