//! The two-branch model: a SAGE encoder over the sampled neighborhood and a
//! trainable projection of precomputed visual features, concatenated and
//! fed to one linear head per task.

mod features;
mod forward;
mod inference;
mod params;
mod task;

pub use features::{bow_features, FeatureMatrix, FeatureRole, TagVocab, UNKNOWN_TAG};
pub use forward::{multitask_loss, EncoderCache, ForwardPass, Model, MultitaskLoss, TaskLoss};
pub use inference::{Neighborhood, Predictions};
pub use params::{Dense, ModelConfig, ModelParams, SageLayer};
pub use task::{Targets, Task, TaskKind, TaskSpec};
