use crate::error::{Error, Result};
use crate::graph::SampledBlock;
use crate::nn::{
    bce_with_logits, concat, concat_backward, l2_normalize_rows, l2_normalize_rows_backward, linear, linear_backward,
    mae_loss, mean_aggregate, mean_aggregate_backward, pad_rows, relu, relu_backward, softmax_cross_entropy, Tensor2,
};

use super::{FeatureMatrix, FeatureRole, ModelConfig, ModelParams, Targets, Task, TaskSpec};

/// Configuration, task heads and weights of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub tasks: Vec<TaskSpec>,
    pub params: ModelParams,
}

struct LayerCache {
    /// Representation of the level the layer reads (rows = next level).
    input: Tensor2,
    self_rows: Tensor2,
    agg: Tensor2,
    pre: Tensor2,
    /// Post-activation, pre-normalisation output (when normalising).
    activated: Option<Tensor2>,
}

/// Intermediate values kept for the backward pass.
pub struct EncoderCache {
    layers: Vec<LayerCache>,
}

pub struct ForwardPass {
    /// Multimodal embedding `relu(P v) ⊕ n`, one row per seed.
    pub embedding: Tensor2,
    /// Raw head outputs (logits / standardised regression values).
    pub outputs: Vec<Tensor2>,
    encoder: EncoderCache,
    visual_in: Tensor2,
    visual_pre: Tensor2,
}

impl Model {
    pub fn new(config: ModelConfig, tasks: Vec<TaskSpec>, seed: u64) -> Result<Self> {
        config.validate()?;
        for t in &tasks {
            t.validate()?;
        }
        let params = ModelParams::init(&config, &tasks, seed);
        Ok(Self { config, tasks, params })
    }

    fn check_block(&self, block: &SampledBlock) -> Result<()> {
        if block.depth() != self.params.sage.len() {
            return Err(Error::shape(
                "encode",
                format!(
                    "block has {} hops, model has {} layers",
                    block.depth(),
                    self.params.sage.len()
                ),
            ));
        }
        Ok(())
    }

    /// Node representations for the block's seeds.
    pub fn encode(&self, feats: &FeatureMatrix, block: &SampledBlock) -> Result<Tensor2> {
        Ok(self.encode_cached(feats, block)?.0)
    }

    pub fn encode_cached(&self, feats: &FeatureMatrix, block: &SampledBlock) -> Result<(Tensor2, EncoderCache)> {
        self.check_block(block)?;
        if feats.dim() != self.config.input_dim {
            return Err(Error::shape(
                "encode",
                format!(
                    "features have {} columns, model expects {}",
                    feats.dim(),
                    self.config.input_dim
                ),
            ));
        }
        let mut h = feats.gather(block.input_nodes(), FeatureRole::Node)?;
        let depth = block.depth();
        let mut layers = Vec::with_capacity(depth);
        for (k, layer) in self.params.sage.iter().enumerate() {
            let hop = &block.hops[depth - 1 - k];
            let self_rows = h.slice_rows(0..hop.len());
            let agg = mean_aggregate(&h, hop)?;
            let mut pre = linear(&self_rows, &layer.w_self, Some(&layer.bias))?;
            pre.add_assign(&linear(&agg, &layer.w_neigh, None)?);
            let last = k + 1 == depth;
            let act = if last { pre.clone() } else { relu(&pre) };
            let (out, activated) = if self.config.normalize {
                (l2_normalize_rows(&act), Some(act))
            } else {
                (act, None)
            };
            layers.push(LayerCache {
                input: std::mem::replace(&mut h, out),
                self_rows,
                agg,
                pre,
                activated,
            });
        }
        Ok((h, EncoderCache { layers }))
    }

    /// Accumulates encoder parameter gradients given `d(loss)/d(n)`.
    pub fn encode_backward(&mut self, cache: &EncoderCache, block: &SampledBlock, grad_out: &Tensor2) -> Result<()> {
        let depth = block.depth();
        let mut g = grad_out.clone();
        for k in (0..depth).rev() {
            let c = &cache.layers[k];
            let hop = &block.hops[depth - 1 - k];
            if let Some(act) = &c.activated {
                g = l2_normalize_rows_backward(act, &g);
            }
            if k + 1 != depth {
                g = relu_backward(&c.pre, &g);
            }
            let layer = &mut self.params.sage[k];
            let d_self = linear_backward(&c.self_rows, &mut layer.w_self, Some(&mut layer.bias), &g)?;
            let d_agg = linear_backward(&c.agg, &mut layer.w_neigh, None, &g)?;
            if k == 0 {
                break; // input features are frozen
            }
            let mut d_in = pad_rows(&d_self, c.input.rows());
            d_in.add_assign(&mean_aggregate_backward(&d_agg, hop, c.input.rows()));
            g = d_in;
        }
        Ok(())
    }

    pub fn forward(&self, feats: &FeatureMatrix, visual: &FeatureMatrix, block: &SampledBlock) -> Result<ForwardPass> {
        if visual.dim() != self.config.visual_dim {
            return Err(Error::shape(
                "forward",
                format!(
                    "visual features have {} columns, model expects {}",
                    visual.dim(),
                    self.config.visual_dim
                ),
            ));
        }
        let visual_in = visual.gather(block.seeds(), FeatureRole::Visual)?;
        let (node_repr, encoder) = self.encode_cached(feats, block)?;
        let visual_pre = linear(&visual_in, &self.params.visual.w, Some(&self.params.visual.b))?;
        let embedding = concat(&relu(&visual_pre), &node_repr)?;
        let outputs = self
            .params
            .heads
            .iter()
            .map(|h| linear(&embedding, &h.w, Some(&h.b)))
            .collect::<Result<_>>()?;
        Ok(ForwardPass {
            embedding,
            outputs,
            encoder,
            visual_in,
            visual_pre,
        })
    }

    /// Accumulates gradients of every parameter given per-head upstream
    /// gradients.
    pub fn backward(&mut self, pass: &ForwardPass, block: &SampledBlock, head_grads: &[Tensor2]) -> Result<()> {
        if head_grads.len() != self.params.heads.len() {
            return Err(Error::shape(
                "backward",
                format!(
                    "{} head gradients for {} heads",
                    head_grads.len(),
                    self.params.heads.len()
                ),
            ));
        }
        let mut d_emb = Tensor2::zeros(pass.embedding.rows(), pass.embedding.cols());
        for (head, g) in self.params.heads.iter_mut().zip(head_grads) {
            d_emb.add_assign(&linear_backward(&pass.embedding, &mut head.w, Some(&mut head.b), g)?);
        }
        let (d_vis, d_node) = concat_backward(&d_emb, self.config.proj_dim);
        let d_vis_pre = relu_backward(&pass.visual_pre, &d_vis);
        let v = &mut self.params.visual;
        linear_backward(&pass.visual_in, &mut v.w, Some(&mut v.b), &d_vis_pre)?;
        self.encode_backward(&pass.encoder, block, &d_node)
    }

    /// Turns a standardised regression output back into target units.
    pub fn denormalize(&self, task: usize, z: f64) -> f64 {
        let t = &self.tasks[task];
        t.offset + t.scale * z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskLoss {
    pub loss: f64,
    /// Seeds that carried a label for the task.
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultitaskLoss {
    /// `Σ w_t L_t`
    pub total: f64,
    pub per_task: Vec<TaskLoss>,
    /// `w_t · dL_t/d(output_t)` for every head, rows aligned to seeds.
    pub grads: Vec<Tensor2>,
}

/// Weighted sum of per-task losses over a batch. Seeds without a label for
/// a task are left out of that task's mean.
pub fn multitask_loss(outputs: &[Tensor2], tasks: &[Task], seeds: &[usize]) -> Result<MultitaskLoss> {
    if outputs.len() != tasks.len() {
        return Err(Error::shape(
            "multitask_loss",
            format!("{} outputs for {} tasks", outputs.len(), tasks.len()),
        ));
    }
    let mut total = 0.0;
    let mut per_task = Vec::with_capacity(tasks.len());
    let mut grads = Vec::with_capacity(tasks.len());
    for (out, task) in outputs.iter().zip(tasks) {
        if out.rows() != seeds.len() || out.cols() != task.spec.output_dim {
            return Err(Error::shape(
                "multitask_loss",
                format!(
                    "task `{}` output {:?} for {} seeds",
                    task.spec.name,
                    out.shape(),
                    seeds.len()
                ),
            ));
        }
        let rows: Vec<usize> = (0..seeds.len()).filter(|&r| task.has_label(seeds[r])).collect();
        let sub = out.gather_rows(&rows);
        let (loss, sub_grad) = match &task.targets {
            Targets::Class(labels) => {
                let y: Vec<usize> = rows.iter().map(|&r| labels[seeds[r]].unwrap()).collect();
                softmax_cross_entropy(&sub, &y)?
            }
            Targets::Value(values) => {
                let (offset, scale) = (task.spec.offset, task.spec.scale);
                let y: Vec<f64> = rows
                    .iter()
                    .map(|&r| (values[seeds[r]].unwrap() - offset) / scale)
                    .collect();
                mae_loss(&sub, &y)?
            }
            Targets::Multi(sets) => {
                let mut y = Tensor2::zeros(rows.len(), task.spec.output_dim);
                for (k, &r) in rows.iter().enumerate() {
                    for &c in sets[seeds[r]].as_ref().unwrap() {
                        y.set(k, c, 1.0);
                    }
                }
                bce_with_logits(&sub, &y)?
            }
        };
        let w = task.spec.weight;
        let mut grad = Tensor2::zeros(out.rows(), out.cols());
        for (k, &r) in rows.iter().enumerate() {
            for (dst, &src) in grad.row_mut(r).iter_mut().zip(sub_grad.row(k)) {
                *dst = w * src;
            }
        }
        total += w * loss;
        per_task.push(TaskLoss {
            loss,
            count: rows.len(),
        });
        grads.push(grad);
    }
    Ok(MultitaskLoss { total, per_task, grads })
}
