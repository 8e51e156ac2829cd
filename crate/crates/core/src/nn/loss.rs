use crate::error::{Error, Result};

use super::Tensor2;

/// Row-wise softmax, stabilised by subtracting the row max.
pub fn softmax_rows(logits: &Tensor2) -> Tensor2 {
    let mut out = logits.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean categorical cross-entropy over rows. Returns the loss and
/// `(softmax − onehot) / N`. An empty batch yields a zero loss.
pub fn softmax_cross_entropy(logits: &Tensor2, labels: &[usize]) -> Result<(f64, Tensor2)> {
    if labels.len() != logits.rows() {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{} labels for {} rows", labels.len(), logits.rows()),
        ));
    }
    let classes = logits.cols();
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label: bad, classes });
    }
    let n = labels.len();
    let mut grad = Tensor2::zeros(logits.rows(), classes);
    if n == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - row[label];
        let g = grad.row_mut(i);
        for (c, slot) in g.iter_mut().enumerate() {
            *slot = (row[c] - log_z).exp() / n as f64;
        }
        g[label] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, grad))
}

/// Mean absolute error over an `n x 1` prediction. The subgradient at an
/// exact match is 0.
pub fn mae_loss(pred: &Tensor2, target: &[f64]) -> Result<(f64, Tensor2)> {
    if pred.cols() != 1 || pred.rows() != target.len() {
        return Err(Error::shape(
            "mae_loss",
            format!("prediction {:?} vs {} targets", pred.shape(), target.len()),
        ));
    }
    let n = target.len();
    let mut grad = Tensor2::zeros(n, 1);
    if n == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for (i, &t) in target.iter().enumerate() {
        let d = pred.get(i, 0) - t;
        loss += d.abs();
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad.set(i, 0, s / n as f64);
    }
    Ok((loss / n as f64, grad))
}

/// Mean per-element binary cross-entropy on logits, computed as
/// `max(z, 0) − z·t + ln(1 + e^{−|z|})`.
pub fn bce_with_logits(logits: &Tensor2, targets: &Tensor2) -> Result<(f64, Tensor2)> {
    if logits.shape() != targets.shape() {
        return Err(Error::shape(
            "bce_with_logits",
            format!("logits {:?} vs targets {:?}", logits.shape(), targets.shape()),
        ));
    }
    let count = logits.data().len();
    let mut grad = Tensor2::zeros(logits.rows(), logits.cols());
    if count == 0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    for ((g, &z), &t) in grad.data_mut().iter_mut().zip(logits.data()).zip(targets.data()) {
        loss += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
        *g = (sigmoid(z) - t) / count as f64;
    }
    Ok((loss / count as f64, grad))
}
