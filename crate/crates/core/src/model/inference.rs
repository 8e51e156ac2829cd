use rayon::prelude::*;

use crate::derive_seed;
use crate::error::Result;
use crate::graph::{sample_neighborhood, Graph};
use crate::nn::Tensor2;

use super::{FeatureMatrix, Model};

/// Graph view plus the optional same-artist mask used when sampling.
#[derive(Clone, Copy)]
pub struct Neighborhood<'a> {
    pub graph: &'a Graph,
    pub artist_of: Option<&'a [u32]>,
}

/// Model outputs for a list of nodes, rows aligned to `nodes`.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictions {
    pub nodes: Vec<usize>,
    pub embedding: Tensor2,
    pub outputs: Vec<Tensor2>,
}

fn stack(parts: Vec<Tensor2>, cols: usize) -> Tensor2 {
    let rows = parts.iter().map(Tensor2::rows).sum();
    let mut data = Vec::with_capacity(rows * cols);
    for p in parts {
        data.extend(p.into_data());
    }
    Tensor2::from_vec(rows, cols, data).expect("consistent widths")
}

impl Model {
    /// Batched forward pass. Batch `b` samples with `derive_seed(seed, [b])`,
    /// so the result does not depend on how batches are scheduled.
    pub fn predict(
        &self,
        nb: Neighborhood<'_>,
        feats: &FeatureMatrix,
        visual: &FeatureMatrix,
        nodes: &[usize],
        batch_size: usize,
        seed: u64,
    ) -> Result<Predictions> {
        let batch_size = batch_size.max(1);
        let batches: Vec<(Tensor2, Vec<Tensor2>)> = nodes
            .par_chunks(batch_size)
            .enumerate()
            .map(|(b, chunk)| {
                let block = sample_neighborhood(
                    nb.graph,
                    chunk,
                    &self.config.fanouts,
                    nb.artist_of,
                    derive_seed(seed, &[b as u64]),
                );
                let pass = self.forward(feats, visual, &block)?;
                Ok((pass.embedding, pass.outputs))
            })
            .collect::<Result<_>>()?;
        let mut embeddings = Vec::with_capacity(batches.len());
        let mut outputs: Vec<Vec<Tensor2>> = vec![Vec::new(); self.tasks.len()];
        for (e, outs) in batches {
            embeddings.push(e);
            for (slot, o) in outputs.iter_mut().zip(outs) {
                slot.push(o);
            }
        }
        Ok(Predictions {
            nodes: nodes.to_vec(),
            embedding: stack(embeddings, self.config.embedding_dim()),
            outputs: outputs
                .into_iter()
                .zip(&self.tasks)
                .map(|(parts, t)| stack(parts, t.output_dim))
                .collect(),
        })
    }
}
