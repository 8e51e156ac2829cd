use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlateauConfig {
    pub enabled: bool,
    pub factor: f64,
    pub patience: usize,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            factor: 10.0,
            patience: 5,
        }
    }
}

/// Optimisation settings. Defaults are SGD with momentum 0.9, learning
/// rate 0.001, batches of 16, a factor-10 plateau decay after 5 stale
/// epochs and early stopping after 10.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub plateau: PlateauConfig,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::SgdMomentum,
            lr: 0.001,
            momentum: 0.9,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 16,
            plateau: PlateauConfig::default(),
            early_stop_patience: 10,
            max_epochs: 100,
        }
    }
}

impl OptimConfig {
    /// Adam at 0.001 with batches of 1024 and no plateau decay.
    pub fn adam_gnn() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            batch_size: 1024,
            plateau: PlateauConfig {
                enabled: false,
                ..PlateauConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.plateau.patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::invalid("patience must be at least 1"));
        }
        if self.plateau.factor.is_nan() || self.plateau.factor <= 1.0 {
            return Err(Error::invalid("plateau factor must exceed 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum)
            || !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
        {
            return Err(Error::invalid("momentum terms must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// `v ← μv + g; w ← w − lr·v`, then clears the gradient.
pub fn sgd_momentum_step(params: &mut [&mut ParamTensor], lr: f64, momentum: f64) {
    for p in params.iter_mut() {
        let ParamTensor {
            value, grad, velocity, ..
        } = &mut **p;
        for ((w, v), g) in value.data_mut().iter_mut().zip(velocity.data_mut()).zip(grad.data()) {
            *v = momentum * *v + g;
            *w -= lr * *v;
        }
        p.zero_grad();
    }
}

/// Bias-corrected Adam update for step number `t` (1-based), then clears
/// the gradient.
pub fn adam_step(params: &mut [&mut ParamTensor], lr: f64, beta1: f64, beta2: f64, eps: f64, t: u64) {
    let c1 = 1.0 - beta1.powi(t as i32);
    let c2 = 1.0 - beta2.powi(t as i32);
    for p in params.iter_mut() {
        let ParamTensor {
            value,
            grad,
            first_moment,
            second_moment,
            ..
        } = &mut **p;
        for (((w, m), v), &g) in value
            .data_mut()
            .iter_mut()
            .zip(first_moment.data_mut())
            .zip(second_moment.data_mut())
            .zip(grad.data())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
        p.zero_grad();
    }
}

/// Stateful wrapper that tracks the Adam step count.
#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimConfig,
    steps: u64,
}

impl Optimizer {
    pub fn new(config: &OptimConfig) -> Self {
        Self {
            config: config.clone(),
            steps: 0,
        }
    }

    pub fn step(&mut self, params: &mut [&mut ParamTensor], lr: f64) {
        self.steps += 1;
        let c = &self.config;
        match c.kind {
            OptimizerKind::SgdMomentum => sgd_momentum_step(params, lr, c.momentum),
            OptimizerKind::Adam => adam_step(params, lr, c.beta1, c.beta2, c.eps, self.steps),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor2;

    fn scalar(v: f64) -> ParamTensor {
        ParamTensor::new(Tensor2::from_rows(&[[v]]))
    }

    #[test]
    fn sgd_zero_gradient_is_noop() {
        let mut p = scalar(3.0);
        sgd_momentum_step(&mut [&mut p], 0.1, 0.9);
        assert_eq!(p.value.get(0, 0), 3.0);
    }

    #[test]
    fn sgd_plain_step() {
        let mut p = scalar(1.0);
        p.grad.set(0, 0, 1.0);
        sgd_momentum_step(&mut [&mut p], 0.1, 0.0);
        assert!((p.value.get(0, 0) - 0.9).abs() < 1e-15);
        assert_eq!(p.grad.get(0, 0), 0.0);
    }

    #[test]
    fn sgd_two_momentum_steps_unrolled() {
        let (lr, mu, g1, g2) = (0.01, 0.9, 2.0, -0.5);
        let mut p = scalar(1.0);
        p.grad.set(0, 0, g1);
        sgd_momentum_step(&mut [&mut p], lr, mu);
        p.grad.set(0, 0, g2);
        sgd_momentum_step(&mut [&mut p], lr, mu);
        // v1 = g1, w1 = 1 − lr g1; v2 = mu g1 + g2, w2 = w1 − lr v2
        let expected = 1.0 - lr * g1 - lr * (mu * g1 + g2);
        assert!((p.value.get(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = scalar(-2.0);
        adam_step(&mut [&mut p], 0.001, 0.9, 0.999, 1e-8, 1);
        assert_eq!(p.value.get(0, 0), -2.0);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = scalar(0.0);
        p.grad.set(0, 0, 1.0);
        adam_step(&mut [&mut p], 0.001, 0.9, 0.999, 1e-8, 1);
        // m̂ = v̂ = 1, so Δ = lr / (1 + ε)
        assert!((p.value.get(0, 0) + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn adam_converges_on_quadratic_bowl() {
        let target = [3.0, -1.5, 0.25];
        let mut p = ParamTensor::new(Tensor2::zeros(1, 3));
        let mut opt = Optimizer::new(&OptimConfig {
            kind: OptimizerKind::Adam,
            ..OptimConfig::default()
        });
        let loss =
            |p: &ParamTensor| -> f64 { p.value.data().iter().zip(&target).map(|(w, t)| (w - t) * (w - t)).sum() };
        let mut steps = 0;
        while loss(&p) >= 1e-6 && steps < 2000 {
            for (k, t) in target.iter().enumerate() {
                let w = p.value.get(0, k);
                p.grad.set(0, k, 2.0 * (w - t));
            }
            opt.step(&mut [&mut p], 0.05);
            steps += 1;
        }
        assert!(loss(&p) < 1e-6, "loss {} after {steps} steps", loss(&p));
    }

    #[test]
    fn config_validation() {
        assert!(OptimConfig::default().validate().is_ok());
        assert!(OptimConfig {
            lr: 0.0,
            ..OptimConfig::default()
        }
        .validate()
        .is_err());
        let mut c = OptimConfig::default();
        c.plateau.factor = 1.0;
        assert!(c.validate().is_err());
        let c: OptimConfig = serde_json::from_str(r#"{"kind":"adam","lr":0.01}"#).unwrap();
        assert_eq!(c.kind, OptimizerKind::Adam);
        assert_eq!(c.early_stop_patience, 10);
    }
}
