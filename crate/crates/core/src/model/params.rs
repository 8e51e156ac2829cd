use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DEFAULT_FANOUTS;
use crate::nn::{ParamTensor, Tensor2};

use super::TaskSpec;

/// Architecture hyper-parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Node feature width fed to the first SAGE layer.
    pub input_dim: usize,
    /// Width of the precomputed visual features.
    pub visual_dim: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_hidden")]
    pub proj_dim: usize,
    /// Per-hop sample sizes, seed hop first.
    #[serde(default = "default_fanouts")]
    pub fanouts: Vec<usize>,
    /// L2-normalise node representations after every SAGE layer.
    #[serde(default)]
    pub normalize: bool,
}

fn default_hidden() -> usize {
    256
}

fn default_fanouts() -> Vec<usize> {
    DEFAULT_FANOUTS.to_vec()
}

impl ModelConfig {
    pub fn new(input_dim: usize, visual_dim: usize) -> Self {
        Self {
            input_dim,
            visual_dim,
            hidden_dim: default_hidden(),
            proj_dim: default_hidden(),
            fanouts: default_fanouts(),
            normalize: false,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.proj_dim + self.hidden_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanouts.is_empty() {
            return Err(Error::invalid("at least one hop is required"));
        }
        if self.input_dim == 0 || self.visual_dim == 0 || self.hidden_dim == 0 || self.proj_dim == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        Ok(())
    }
}

/// `n = W_self · h_self + W_neigh · mean(h_neighbors) + b`
#[derive(Clone, Debug, PartialEq)]
pub struct SageLayer {
    pub w_self: ParamTensor,
    pub w_neigh: ParamTensor,
    pub bias: ParamTensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub w: ParamTensor,
    pub b: ParamTensor,
}

impl Dense {
    fn init(out_dim: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            w: ParamTensor::new(Tensor2::glorot(out_dim, in_dim, rng)),
            b: ParamTensor::zeros(1, out_dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    /// Innermost layer first: `sage[0]` reads the raw node features.
    pub sage: Vec<SageLayer>,
    pub visual: Dense,
    /// One head per task, in task order.
    pub heads: Vec<Dense>,
}

impl ModelParams {
    pub fn init(config: &ModelConfig, tasks: &[TaskSpec], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sage = (0..config.fanouts.len())
            .map(|k| {
                let in_dim = if k == 0 { config.input_dim } else { config.hidden_dim };
                SageLayer {
                    w_self: ParamTensor::new(Tensor2::glorot(config.hidden_dim, in_dim, &mut rng)),
                    w_neigh: ParamTensor::new(Tensor2::glorot(config.hidden_dim, in_dim, &mut rng)),
                    bias: ParamTensor::zeros(1, config.hidden_dim),
                }
            })
            .collect();
        let visual = Dense::init(config.proj_dim, config.visual_dim, &mut rng);
        let heads = tasks
            .iter()
            .map(|t| Dense::init(t.output_dim, config.embedding_dim(), &mut rng))
            .collect();
        Self { sage, visual, heads }
    }

    /// Every tensor in checkpoint order: SAGE layers (self, neighbor,
    /// bias), the visual projection (weight, bias), then each head.
    pub fn tensors(&self) -> Vec<&ParamTensor> {
        let mut out = Vec::new();
        for l in &self.sage {
            out.extend([&l.w_self, &l.w_neigh, &l.bias]);
        }
        out.extend([&self.visual.w, &self.visual.b]);
        for h in &self.heads {
            out.extend([&h.w, &h.b]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::new();
        for l in &mut self.sage {
            out.extend([&mut l.w_self, &mut l.w_neigh, &mut l.bias]);
        }
        out.extend([&mut self.visual.w, &mut self.visual.b]);
        for h in &mut self.heads {
            out.extend([&mut h.w, &mut h.b]);
        }
        out
    }

    pub fn zero_grad(&mut self) {
        self.tensors_mut().into_iter().for_each(ParamTensor::zero_grad);
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.value.is_finite())
    }

    /// Sets every value to zero.
    pub fn zero_values(&mut self) {
        for t in self.tensors_mut() {
            t.value.fill(0.0);
        }
    }
}
