use crate::error::{Error, Result};
use crate::graph::HopBlock;

use super::{ParamTensor, Tensor2};

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y = x Wᵀ + b`, with `W` stored as `out x in` and `b` as `1 x out`.
pub fn linear(x: &Tensor2, w: &ParamTensor, b: Option<&ParamTensor>) -> Result<Tensor2> {
    let (out_dim, in_dim) = w.shape();
    if x.cols() != in_dim {
        return Err(Error::shape(
            "linear",
            format!("input has {} columns, weight expects {in_dim}", x.cols()),
        ));
    }
    if let Some(b) = b {
        if b.shape() != (1, out_dim) {
            return Err(Error::shape(
                "linear",
                format!("bias is {:?}, expected (1, {out_dim})", b.shape()),
            ));
        }
    }
    let mut y = Tensor2::zeros(x.rows(), out_dim);
    for i in 0..x.rows() {
        let xi = x.row(i);
        let yi = y.row_mut(i);
        for (o, slot) in yi.iter_mut().enumerate() {
            *slot = dot(xi, w.value.row(o));
        }
        if let Some(b) = b {
            axpy(1.0, b.value.row(0), yi);
        }
    }
    Ok(y)
}

/// Accumulates `dW += gᵀx`, `db += colsum(g)` and returns `dx = gW`.
pub fn linear_backward(
    x: &Tensor2,
    w: &mut ParamTensor,
    b: Option<&mut ParamTensor>,
    grad_out: &Tensor2,
) -> Result<Tensor2> {
    let (out_dim, in_dim) = w.shape();
    if grad_out.shape() != (x.rows(), out_dim) || x.cols() != in_dim {
        return Err(Error::shape(
            "linear_backward",
            format!(
                "x {:?}, weight {:?}, upstream {:?}",
                x.shape(),
                w.shape(),
                grad_out.shape()
            ),
        ));
    }
    let mut dx = Tensor2::zeros(x.rows(), in_dim);
    for i in 0..x.rows() {
        let gi = grad_out.row(i);
        let xi = x.row(i);
        for (o, &g) in gi.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            axpy(g, xi, w.grad.row_mut(o));
            axpy(g, w.value.row(o), dx.row_mut(i));
        }
    }
    if let Some(b) = b {
        let db = b.grad.row_mut(0);
        for i in 0..grad_out.rows() {
            axpy(1.0, grad_out.row(i), db);
        }
    }
    Ok(dx)
}

/// Row `i` of the result is the mean of the sampled-neighbor rows of target
/// `i`; targets without neighbors get a zero row.
pub fn mean_aggregate(feats: &Tensor2, hop: &HopBlock) -> Result<Tensor2> {
    if let Some(&bad) = hop.neighbor_rows.iter().find(|&&r| r >= feats.rows()) {
        return Err(Error::shape(
            "mean_aggregate",
            format!("neighbor row {bad} but only {} feature rows", feats.rows()),
        ));
    }
    let mut out = Tensor2::zeros(hop.len(), feats.cols());
    for t in 0..hop.len() {
        let rows = hop.rows_of(t);
        if rows.is_empty() {
            continue;
        }
        let inv = 1.0 / rows.len() as f64;
        let dst = out.row_mut(t);
        for &r in rows {
            axpy(inv, feats.row(r), dst);
        }
    }
    Ok(out)
}

/// Scatters `g_t / deg(t)` into every neighbor row of target `t`.
pub fn mean_aggregate_backward(grad_out: &Tensor2, hop: &HopBlock, feat_rows: usize) -> Tensor2 {
    let mut dfeats = Tensor2::zeros(feat_rows, grad_out.cols());
    for t in 0..hop.len() {
        let rows = hop.rows_of(t);
        if rows.is_empty() {
            continue;
        }
        let inv = 1.0 / rows.len() as f64;
        for &r in rows {
            axpy(inv, grad_out.row(t), dfeats.row_mut(r));
        }
    }
    dfeats
}

/// `max(x, 0)`; NaN passes through so bad inputs surface in the loss.
pub fn relu(x: &Tensor2) -> Tensor2 {
    x.map(|v| if v < 0.0 { 0.0 } else { v })
}

/// Masks the upstream gradient by the sign of the pre-activation.
pub fn relu_backward(pre: &Tensor2, grad_out: &Tensor2) -> Tensor2 {
    let mut g = grad_out.clone();
    for (gi, &p) in g.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *gi = 0.0;
        }
    }
    g
}

/// Column-wise concatenation `[a | b]`.
pub fn concat(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.rows() != b.rows() {
        return Err(Error::shape(
            "concat",
            format!("{} rows vs {} rows", a.rows(), b.rows()),
        ));
    }
    let mut out = Tensor2::zeros(a.rows(), a.cols() + b.cols());
    for i in 0..a.rows() {
        let row = out.row_mut(i);
        row[..a.cols()].copy_from_slice(a.row(i));
        row[a.cols()..].copy_from_slice(b.row(i));
    }
    Ok(out)
}

pub fn concat_backward(grad_out: &Tensor2, left_cols: usize) -> (Tensor2, Tensor2) {
    let right_cols = grad_out.cols() - left_cols;
    let mut ga = Tensor2::zeros(grad_out.rows(), left_cols);
    let mut gb = Tensor2::zeros(grad_out.rows(), right_cols);
    for i in 0..grad_out.rows() {
        let row = grad_out.row(i);
        ga.row_mut(i).copy_from_slice(&row[..left_cols]);
        gb.row_mut(i).copy_from_slice(&row[left_cols..]);
    }
    (ga, gb)
}

/// Backward of taking the first `g.rows()` rows of a `total_rows` tensor.
pub fn pad_rows(grad: &Tensor2, total_rows: usize) -> Tensor2 {
    let mut out = Tensor2::zeros(total_rows, grad.cols());
    out.data_mut()[..grad.data().len()].copy_from_slice(grad.data());
    out
}

/// Scales each row to unit L2 norm. Zero rows stay zero.
pub fn l2_normalize_rows(x: &Tensor2) -> Tensor2 {
    let mut y = x.clone();
    for i in 0..y.rows() {
        let row = y.row_mut(i);
        let n = dot(row, row).sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        }
    }
    y
}

pub fn l2_normalize_rows_backward(x: &Tensor2, grad_out: &Tensor2) -> Tensor2 {
    let mut dx = Tensor2::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        let xi = x.row(i);
        let n = dot(xi, xi).sqrt();
        if n == 0.0 {
            continue;
        }
        let gi = grad_out.row(i);
        // y = x/n; dx = (g - y (y·g)) / n
        let yg = dot(xi, gi) / n;
        for ((d, &xv), &gv) in dx.row_mut(i).iter_mut().zip(xi).zip(gi) {
            *d = (gv - xv / n * yg) / n;
        }
    }
    dx
}
