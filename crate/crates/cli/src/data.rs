use std::path::Path;

use anyhow::{bail, Context, Result};
use sagenet_core::graph::{split_view, Graph, LabelValue, RecordManifest, Split};
use sagenet_core::io::{derive_timeframes, load_checkpoint, load_feature_matrix, load_graph, load_manifest};
use sagenet_core::model::{FeatureMatrix, Model, Task, TaskSpec};
use sagenet_core::trainer::TrainData;

use crate::config::{RunInfo, TrainConfig};

pub const TIMEFRAME: &str = "timeframe";

/// Everything a trained model needs to run over a collection.
pub struct Dataset {
    pub manifest: RecordManifest,
    pub graph: Graph,
    pub feats: FeatureMatrix,
    pub visual: FeatureMatrix,
    pub artist_of: Option<Vec<u32>>,
}

impl Dataset {
    pub fn load(manifest: &Path, graph: &Path, features: &Path, visual: &Path, cfg: &TrainConfig) -> Result<Self> {
        let mut manifest = load_manifest(manifest)?;
        let graph = load_graph(graph)?;
        if graph.node_count() != manifest.len() {
            bail!(
                "graph has {} nodes but the manifest has {} records; rebuild the graph",
                graph.node_count(),
                manifest.len()
            );
        }
        let has_timeframe = manifest.records().iter().any(|r| r.labels.contains_key(TIMEFRAME));
        if !has_timeframe {
            derive_timeframes(&mut manifest, &cfg.date_key, TIMEFRAME);
        }
        let feats =
            load_feature_matrix(features, &manifest).with_context(|| format!("loading {}", features.display()))?;
        let visual = load_feature_matrix(visual, &manifest).with_context(|| format!("loading {}", visual.display()))?;
        let artist_of = cfg.mask_same_artist.then(|| manifest.property_codes(&cfg.artist_key));
        Ok(Self {
            manifest,
            graph,
            feats,
            visual,
            artist_of,
        })
    }

    pub fn tasks(&self, specs: Vec<TaskSpec>) -> Result<Vec<Task>> {
        Ok(specs
            .into_iter()
            .map(|s| Task::from_manifest(&self.manifest, s))
            .collect::<sagenet_core::Result<_>>()?)
    }

    pub fn train_data<'a>(&'a self, tasks: &'a [Task], cfg: &TrainConfig) -> TrainData<'a> {
        TrainData {
            manifest: &self.manifest,
            graph: &self.graph,
            feats: &self.feats,
            visual: &self.visual,
            tasks,
            artist_of: self.artist_of.as_deref(),
            eval_neighbors: cfg.eval_neighbors,
        }
    }

    /// Graph restricted to what `split` may see at inference time.
    pub fn view(&self, split: Split, cfg: &TrainConfig) -> Result<Graph> {
        Ok(split_view(&self.graph, &self.manifest, split, cfg.eval_neighbors)?)
    }

    pub fn label_text(&self, node: usize, key: &str) -> Option<String> {
        let r = self.manifest.get(node);
        match r.labels.get(key) {
            Some(LabelValue::Text(t)) => Some(t.clone()),
            Some(LabelValue::Number(v)) => Some(v.to_string()),
            Some(LabelValue::Set(tags)) => Some(tags.join("|")),
            None => r.properties.get(key).cloned(),
        }
    }
}

/// A checkpoint with the data it was trained on.
pub struct Session {
    pub model: Model,
    pub run: RunInfo,
    pub data: Dataset,
    pub tasks: Vec<Task>,
}

impl Session {
    pub fn open(model_path: &Path) -> Result<Self> {
        let (model, meta) = load_checkpoint(model_path).with_context(|| format!("loading {}", model_path.display()))?;
        let run: RunInfo = serde_json::from_value(meta.run).context("checkpoint sidecar lacks run information")?;
        let data = Dataset::load(&run.manifest, &run.graph, &run.features, &run.visual, &run.config)?;
        let tasks = data.tasks(meta.tasks)?;
        Ok(Self {
            model,
            run,
            data,
            tasks,
        })
    }
}
