//! Optimisation loop: SGD with momentum or Adam, plateau learning-rate
//! decay, early stopping and best-checkpoint selection.

mod evaluate;
mod fit;
mod optim;
mod schedule;

pub use evaluate::{regression_errors, report, CS_THETA, TAG_THRESHOLD};
pub use fit::{evaluate_nodes, fit, EpochLog, FitOptions, FitResult, TrainData, TrainLog, EVAL_BATCH_SIZE};
pub use optim::{adam_step, sgd_momentum_step, OptimConfig, Optimizer, OptimizerKind, PlateauConfig};
pub use schedule::{early_stop, reduce_on_plateau, EarlyStopping, PlateauScheduler};
