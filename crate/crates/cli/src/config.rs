use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sagenet_core::graph::NeighborPolicy;
use sagenet_core::graph::DEFAULT_FANOUTS;
use sagenet_core::trainer::OptimConfig;
use serde::{Deserialize, Serialize};

/// `train --config` file: optimizer settings plus model and data options.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    #[serde(flatten)]
    pub optim: OptimConfig,
    pub hidden_dim: usize,
    pub proj_dim: usize,
    pub fanouts: Vec<usize>,
    pub normalize: bool,
    /// Drop seed-incident edges to records by the same artist.
    pub mask_same_artist: bool,
    pub artist_key: String,
    pub eval_neighbors: NeighborPolicy,
    /// Label holding the creation year; `timeframe` is derived from it.
    pub date_key: String,
    /// Per-task loss weight; missing tasks get 1.
    pub task_weights: BTreeMap<String, f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optim: OptimConfig::default(),
            hidden_dim: 256,
            proj_dim: 256,
            fanouts: DEFAULT_FANOUTS.to_vec(),
            normalize: false,
            mask_same_artist: true,
            artist_key: "artist".into(),
            eval_neighbors: NeighborPolicy::SameSplit,
            date_key: "date".into(),
            task_weights: BTreeMap::new(),
        }
    }
}

impl TrainConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Stored in the checkpoint sidecar so later commands can reload the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub manifest: PathBuf,
    pub graph: PathBuf,
    pub features: PathBuf,
    pub visual: PathBuf,
    pub seed: u64,
    pub config: TrainConfig,
}
