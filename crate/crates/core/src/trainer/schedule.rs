//! Validation-loss driven learning-rate decay and early stopping.
//!
//! Both count epochs since the best validation loss independently. An
//! epoch improves only if its loss is strictly below the best so far.

/// Divides the learning rate by `factor` once the best validation loss has
/// gone `patience` consecutive epochs without improving.
#[derive(Clone, Debug)]
pub struct PlateauScheduler {
    factor: f64,
    patience: usize,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    pub fn new(factor: f64, patience: usize) -> Self {
        Self {
            factor,
            patience,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records one epoch and returns the learning rate for the next.
    pub fn observe(&mut self, val_loss: f64, lr: f64) -> f64 {
        if val_loss < self.best {
            self.best = val_loss;
            self.stale = 0;
            return lr;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            self.stale = 0;
            lr / self.factor
        } else {
            lr
        }
    }
}

/// Learning rate in effect after each epoch of `val_losses`.
pub fn reduce_on_plateau(val_losses: &[f64], lr: f64, factor: f64, patience: usize) -> Vec<f64> {
    let mut sched = PlateauScheduler::new(factor, patience);
    let mut lr = lr;
    val_losses
        .iter()
        .map(|&v| {
            lr = sched.observe(v, lr);
            lr
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            epoch: 0,
        }
    }

    /// Records one epoch; true once the best loss is `patience` epochs old.
    pub fn observe(&mut self, val_loss: f64) -> bool {
        self.epoch += 1;
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = self.epoch;
        }
        self.epoch - self.best_epoch >= self.patience
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// The 1-based epoch at which training stops, if it does.
pub fn early_stop(val_losses: &[f64], patience: usize) -> Option<usize> {
    let mut es = EarlyStopping::new(patience);
    val_losses.iter().position(|&v| es.observe(v)).map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improving_keeps_lr() {
        let losses: Vec<f64> = (0..20).map(|i| 1.0 / (i + 1) as f64).collect();
        assert!(reduce_on_plateau(&losses, 0.001, 10.0, 5).iter().all(|&lr| lr == 0.001));
    }

    #[test]
    fn five_flat_epochs_divide_by_ten() {
        let lrs = reduce_on_plateau(&[1.0; 6], 0.001, 10.0, 5);
        assert_eq!(&lrs[..5], &[0.001; 5]);
        assert!((lrs[5] - 0.0001).abs() < 1e-18);
    }

    #[test]
    fn counter_resets_after_reduction() {
        let lrs = reduce_on_plateau(&[1.0; 11], 1.0, 10.0, 5);
        assert_eq!(lrs[5], 0.1);
        assert_eq!(lrs[9], 0.1);
        assert_eq!(lrs[10], 0.01);
    }

    #[test]
    fn monotone_never_stops() {
        let losses: Vec<f64> = (0..100).map(|i| 100.0 - i as f64).collect();
        assert_eq!(early_stop(&losses, 10), None);
    }

    #[test]
    fn flat_after_epoch_three_stops_at_thirteen() {
        let mut losses = vec![3.0, 2.0, 1.0];
        losses.extend([1.0; 15]);
        assert_eq!(early_stop(&losses, 10), Some(13));
    }
}
