//! Central finite-difference oracle for gradient checks.

use super::Tensor2;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_grad(x: &Tensor2, mut f: impl FnMut(&Tensor2) -> f64) -> Tensor2 {
    numeric_grad_eps(x, DEFAULT_EPS, &mut f)
}

pub fn numeric_grad_eps(x: &Tensor2, eps: f64, mut f: impl FnMut(&Tensor2) -> f64) -> Tensor2 {
    let mut probe = x.clone();
    let mut grad = Tensor2::zeros(x.rows(), x.cols());
    for k in 0..x.data().len() {
        let orig = probe.data()[k];
        probe.data_mut()[k] = orig + eps;
        let plus = f(&probe);
        probe.data_mut()[k] = orig - eps;
        let minus = f(&probe);
        probe.data_mut()[k] = orig;
        grad.data_mut()[k] = (plus - minus) / (2.0 * eps);
    }
    grad
}

/// `‖a − b‖ / max(‖a‖ + ‖b‖, 1e-12)`; zero when both are zero.
pub fn relative_error(a: &Tensor2, b: &Tensor2) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let norm = |t: &Tensor2| t.data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let scale = norm(a) + norm(b);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale.max(1e-12)
    }
}
