use std::io::Write;
use std::sync::mpsc;
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::graph::{sample_neighborhood, split_view, Graph, NeighborPolicy, RecordManifest, SampledBlock, Split};
use crate::metrics::{EvalReport, ThetaComparison};
use crate::model::{multitask_loss, FeatureMatrix, Model, Neighborhood, Task};

use super::evaluate::report;
use super::{EarlyStopping, OptimConfig, Optimizer, PlateauScheduler};

/// Inference batch size for validation passes.
pub const EVAL_BATCH_SIZE: usize = 1024;

/// Everything `fit` reads besides the model.
pub struct TrainData<'a> {
    pub manifest: &'a RecordManifest,
    /// Full (degree-capped) graph; split views are derived from it.
    pub graph: &'a Graph,
    pub feats: &'a FeatureMatrix,
    pub visual: &'a FeatureMatrix,
    pub tasks: &'a [Task],
    /// Artist code per node; enables the same-artist first-hop mask.
    pub artist_of: Option<&'a [u32]>,
    /// Neighbors available to validation/test nodes.
    pub eval_neighbors: NeighborPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    /// `(column name, value)` for each task's headline metric.
    pub metrics: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

impl TrainLog {
    /// `epoch,train_loss,val_loss,lr,<task metrics...>`
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "epoch,train_loss,val_loss,lr")?;
        if let Some(first) = self.epochs.first() {
            for (name, _) in &first.metrics {
                write!(w, ",{name}")?;
            }
        }
        writeln!(w)?;
        for e in &self.epochs {
            write!(w, "{},{},{},{}", e.epoch, e.train_loss, e.val_loss, e.lr)?;
            for (_, v) in &e.metrics {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct FitOptions {
    pub seed: u64,
    /// Sample the next batch on a helper thread while the current one trains.
    pub prefetch: bool,
}

pub struct FitResult {
    /// Weights from the epoch with the lowest validation loss.
    pub model: Model,
    pub best_epoch: usize,
    pub log: TrainLog,
    pub best_report: EvalReport,
}

fn metric_columns(report: &EvalReport) -> Vec<(String, f64)> {
    report
        .tasks
        .iter()
        .filter_map(|(name, r)| r.headline().map(|(k, v)| (format!("{name}_{k}"), v)))
        .collect()
}

/// Evaluates `model` on `nodes` drawn from `view`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_nodes(
    model: &Model,
    view: &Graph,
    data: &TrainData<'_>,
    nodes: &[usize],
    split: &str,
    seed: u64,
    cmp: ThetaComparison,
) -> Result<EvalReport> {
    let nb = Neighborhood {
        graph: view,
        artist_of: data.artist_of,
    };
    let preds = model.predict(nb, data.feats, data.visual, nodes, EVAL_BATCH_SIZE, seed)?;
    report(model, &preds, data.tasks, split, cmp)
}

fn sample_epoch_batches<'a>(
    view: &'a Graph,
    order: &'a [usize],
    batch_size: usize,
    fanouts: &[usize],
    artist_of: Option<&'a [u32]>,
    seed: u64,
    epoch: usize,
) -> impl Iterator<Item = SampledBlock> + Send + 'a {
    let fanouts = fanouts.to_vec();
    order.chunks(batch_size).enumerate().map(move |(b, chunk)| {
        sample_neighborhood(
            view,
            chunk,
            &fanouts,
            artist_of,
            derive_seed(seed, &[epoch as u64, b as u64]),
        )
    })
}

/// Mini-batch training with per-epoch validation, plateau decay and early
/// stopping. Returns the best-validation checkpoint.
pub fn fit(mut model: Model, data: &TrainData<'_>, optim: &OptimConfig, opts: &FitOptions) -> Result<FitResult> {
    optim.validate()?;
    let train_nodes = data.manifest.nodes_in(Split::Train);
    let val_nodes = data.manifest.nodes_in(Split::Val);
    if train_nodes.is_empty() || val_nodes.is_empty() {
        return Err(Error::invalid("train and validation splits must be non-empty"));
    }
    let train_view = split_view(data.graph, data.manifest, Split::Train, NeighborPolicy::SameSplit)?;
    let val_view = split_view(data.graph, data.manifest, Split::Val, data.eval_neighbors)?;
    let val_seed = derive_seed(opts.seed, &[u64::MAX]);

    let mut optimizer = Optimizer::new(optim);
    let mut plateau = PlateauScheduler::new(optim.plateau.factor, optim.plateau.patience);
    let mut stopper = EarlyStopping::new(optim.early_stop_patience);
    let mut lr = optim.lr;
    let mut log = TrainLog::default();
    let mut best: Option<(f64, usize, Model, EvalReport)> = None;

    for epoch in 1..=optim.max_epochs {
        let mut order = train_nodes.clone();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, &[epoch as u64])));
        let fanouts = model.config.fanouts.clone();

        let mut loss_sum = 0.0;
        let mut step = |b: usize, block: SampledBlock| -> Result<()> {
            model.params.zero_grad();
            let pass = model.forward(data.feats, data.visual, &block)?;
            let loss = multitask_loss(&pass.outputs, data.tasks, block.seeds())?;
            if !loss.total.is_finite() {
                let parts: Vec<String> = loss
                    .per_task
                    .iter()
                    .zip(data.tasks)
                    .map(|(l, t)| format!("{}={} (n={})", t.spec.name, l.loss, l.count))
                    .collect();
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    detail: format!("lr={lr}, {}", parts.join(", ")),
                });
            }
            model.backward(&pass, &block, &loss.grads)?;
            optimizer.step(&mut model.params.tensors_mut(), lr);
            loss_sum += loss.total * block.seeds().len() as f64;
            Ok(())
        };

        let batches = sample_epoch_batches(
            &train_view,
            &order,
            optim.batch_size,
            &fanouts,
            data.artist_of,
            opts.seed,
            epoch,
        );
        if opts.prefetch {
            thread::scope(|s| -> Result<()> {
                let (tx, rx) = mpsc::sync_channel::<SampledBlock>(2);
                s.spawn(move || {
                    for block in batches {
                        if tx.send(block).is_err() {
                            break;
                        }
                    }
                });
                for (b, block) in rx.into_iter().enumerate() {
                    step(b, block)?;
                }
                Ok(())
            })?;
        } else {
            for (b, block) in batches.enumerate() {
                step(b, block)?;
            }
        }
        let train_loss = loss_sum / train_nodes.len() as f64;

        let val = evaluate_nodes(
            &model,
            &val_view,
            data,
            &val_nodes,
            "val",
            val_seed,
            ThetaComparison::Strict,
        )?;
        let val_loss = val.total_loss;
        log.epochs.push(EpochLog {
            epoch,
            train_loss,
            val_loss,
            lr,
            metrics: metric_columns(&val),
        });
        if best.as_ref().is_none_or(|(b, ..)| val_loss < *b) {
            best = Some((val_loss, epoch, model.clone(), val));
        }
        if optim.plateau.enabled {
            lr = plateau.observe(val_loss, lr);
        }
        if stopper.observe(val_loss) {
            break;
        }
    }

    let (_, best_epoch, best_model, best_report) =
        best.ok_or_else(|| Error::invalid("max_epochs must be at least 1"))?;
    Ok(FitResult {
        model: best_model,
        best_epoch,
        log,
        best_report,
    })
}
