//! Synthetic collections with a known structure.
//!
//! Records are spread over schools; each record's style agrees with its
//! school with a configurable probability. Node features are the style's
//! prototype plus isotropic Gaussian noise, the date label is a
//! style-dependent year with uniform jitter, and the tag set is a fixed
//! function of the style.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{build_adjacency, LabelValue, NeighborPolicy, Record, RecordManifest, Split, DEFAULT_MAX_DEGREE};
use crate::graph::{downsample_degrees, Graph};
use crate::io::make_splits;
use crate::model::{FeatureMatrix, Task, TaskSpec};
use crate::nn::Tensor2;
use crate::trainer::TrainData;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub nodes: usize,
    pub schools: usize,
    pub classes: usize,
    pub artists_per_school: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    /// Probability that a record's style equals its school index.
    pub school_style_agreement: f64,
    pub tags: usize,
    pub year_base: f64,
    pub year_step: f64,
    pub year_jitter: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            nodes: 200,
            schools: 4,
            classes: 4,
            artists_per_school: 5,
            feature_dim: 16,
            noise_sigma: 0.5,
            school_style_agreement: 0.8,
            tags: 3,
            year_base: 1850.0,
            year_step: 25.0,
            year_jitter: 1.0,
            seed: 0,
        }
    }
}

pub struct SyntheticCollection {
    pub manifest: RecordManifest,
    /// Node-aligned features.
    pub features: Tensor2,
    pub prototypes: Tensor2,
    pub styles: Vec<usize>,
}

/// Tags carried by a style: bit `t` of `style + 1`.
pub fn style_tags(style: usize, tags: usize) -> Vec<String> {
    (0..tags)
        .filter(|t| ((style + 1) >> t) & 1 == 1)
        .map(|t| format!("tag_{t}"))
        .collect()
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticCollection> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let classes = cfg.classes.max(1);
    let mut proto = Tensor2::zeros(classes, cfg.feature_dim);
    for v in proto.data_mut() {
        *v = StandardNormal.sample(&mut rng);
    }
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| crate::Error::invalid(e.to_string()))?;
    let mut features = Tensor2::zeros(cfg.nodes, cfg.feature_dim);
    let mut records = Vec::with_capacity(cfg.nodes);
    let mut styles = Vec::with_capacity(cfg.nodes);
    for i in 0..cfg.nodes {
        let school = i % cfg.schools.max(1);
        let style = if rng.random::<f64>() < cfg.school_style_agreement {
            school % classes
        } else {
            rng.random_range(0..classes)
        };
        let artist = rng.random_range(0..cfg.artists_per_school.max(1));
        let year = cfg.year_base
            + cfg.year_step * style as f64
            + if cfg.year_jitter > 0.0 {
                rng.random_range(-cfg.year_jitter..=cfg.year_jitter)
            } else {
                0.0
            };
        for (dst, &p) in features.row_mut(i).iter_mut().zip(proto.row(style)) {
            *dst = p + noise.sample(&mut rng);
        }
        records.push(
            Record::new(format!("n{i:05}"))
                .with_property("school", &format!("school_{school}"))
                .with_property("artist", &format!("artist_{school}_{artist}"))
                .with_label("style", LabelValue::Text(format!("style_{style}")))
                .with_label("artist", LabelValue::Text(format!("artist_{school}_{artist}")))
                .with_label("date", LabelValue::Number(year))
                .with_label("tags", LabelValue::Set(style_tags(style, cfg.tags))),
        );
        styles.push(style);
    }
    Ok(SyntheticCollection {
        manifest: RecordManifest::new(records)?,
        features,
        prototypes: proto,
        styles,
    })
}

/// A split synthetic collection with its graph, features and the
/// style / date / tags tasks, ready for `fit`.
pub struct SynthExperiment {
    pub manifest: RecordManifest,
    pub graph: Graph,
    pub feats: FeatureMatrix,
    pub visual: FeatureMatrix,
    pub tasks: Vec<Task>,
    pub artist_of: Vec<u32>,
}

impl SynthExperiment {
    /// Generates `cfg`, splits it (stratified by style) and links records
    /// by school. Regression targets are standardized on the train split.
    pub fn prepare(cfg: &SynthConfig, fractions: [f64; 3]) -> Result<Self> {
        let mut c = generate(cfg)?;
        make_splits(&c.manifest, fractions, cfg.seed, Some("style"))?.apply(&mut c.manifest);
        let graph = downsample_degrees(&build_adjacency(&c.manifest, "school")?, DEFAULT_MAX_DEGREE, cfg.seed)?;
        let feats = FeatureMatrix::dense(&c.manifest, c.features)?;
        let train = c.manifest.nodes_in(Split::Train);
        let tasks = ["style", "date", "tags"]
            .iter()
            .map(|name| Task::from_manifest(&c.manifest, TaskSpec::infer(&c.manifest, name, 1.0, &train)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            artist_of: c.manifest.property_codes("artist"),
            visual: feats.clone(),
            feats,
            graph,
            tasks,
            manifest: c.manifest,
        })
    }

    pub fn specs(&self) -> Vec<TaskSpec> {
        self.tasks.iter().map(|t| t.spec.clone()).collect()
    }

    pub fn train_data(&self) -> TrainData<'_> {
        TrainData {
            manifest: &self.manifest,
            graph: &self.graph,
            feats: &self.feats,
            visual: &self.visual,
            tasks: &self.tasks,
            artist_of: Some(&self.artist_of),
            eval_neighbors: NeighborPolicy::SameSplit,
        }
    }
}
