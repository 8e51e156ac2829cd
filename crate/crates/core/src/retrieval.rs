//! Embedding extraction and exact cosine k-nearest-neighbor search.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::RecordManifest;
use crate::io::{load_embeddings, write_embeddings};
use crate::model::{FeatureMatrix, Model, Neighborhood};
use crate::nn::Tensor2;

/// Multimodal (pre-head) embeddings keyed by record id.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingStore {
    ids: Vec<String>,
    row_of: HashMap<String, usize>,
    data: Tensor2,
}

/// One retrieval result.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub id: String,
    pub distance: f64,
}

impl EmbeddingStore {
    pub fn new(ids: Vec<String>, data: Tensor2) -> Result<Self> {
        if ids.len() != data.rows() {
            return Err(Error::shape(
                "embedding store",
                format!("{} ids for {} rows", ids.len(), data.rows()),
            ));
        }
        if !data.is_finite() {
            return Err(Error::invalid("embedding store contains non-finite values"));
        }
        let mut row_of = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if row_of.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self { ids, row_of, data })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &Tensor2 {
        &self.data
    }

    pub fn row(&self, id: &str) -> Option<&[f64]> {
        self.row_of.get(id).map(|&r| self.data.row(r))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_embeddings(path, &self.ids, &self.data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (ids, data) = load_embeddings(path)?;
        Self::new(ids, data)
    }
}

#[allow(clippy::too_many_arguments)]
/// Embeds `nodes` in `batch_size` batches; batch `b` samples its
/// neighborhoods with `derive_seed(seed, [b])`.
pub fn embed_all(
    model: &Model,
    nb: Neighborhood<'_>,
    manifest: &RecordManifest,
    feats: &FeatureMatrix,
    visual: &FeatureMatrix,
    nodes: &[usize],
    batch_size: usize,
    seed: u64,
) -> Result<EmbeddingStore> {
    let preds = model.predict(nb, feats, visual, nodes, batch_size, seed)?;
    let ids = nodes.iter().map(|&n| manifest.get(n).id.clone()).collect();
    EmbeddingStore::new(ids, preds.embedding)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 − cos(a, b)`. A zero vector is treated as orthogonal to everything.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    1.0 - (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// The `k` entries closest to `query_id` by cosine distance, excluding the
/// query itself, ordered by (distance, id).
pub fn knn(store: &EmbeddingStore, query_id: &str, k: usize) -> Result<Vec<Neighbor>> {
    let &q = store
        .row_of
        .get(query_id)
        .ok_or_else(|| Error::UnknownId(query_id.to_string()))?;
    if k == 0 || k >= store.len() {
        return Err(Error::invalid(format!(
            "k must be in 1..{} for a store of {} embeddings, got {k}",
            store.len(),
            store.len()
        )));
    }
    let query = store.data.row(q);
    if norm(query) == 0.0 {
        return Err(Error::DegenerateEmbedding(query_id.to_string()));
    }
    let mut ranked: Vec<(f64, &str)> = (0..store.len())
        .filter(|&r| r != q)
        .map(|r| (cosine_distance(query, store.data.row(r)), store.ids[r].as_str()))
        .collect();
    let cmp = |a: &(f64, &str), b: &(f64, &str)| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1));
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k - 1, cmp);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(cmp);
    Ok(ranked
        .into_iter()
        .map(|(distance, id)| Neighbor {
            id: id.to_string(),
            distance,
        })
        .collect())
}
