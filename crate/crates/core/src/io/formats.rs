//! Binary file formats. All integers and floats are little-endian.
//!
//! | file        | layout |
//! |-------------|--------|
//! | features    | `SGF1`, u64 rows, u64 dim, u32 dtype (1 = f32), rows × (u32 id length, UTF-8 id), rows·dim f32 |
//! | graph       | `SGG1`, u64 nodes, u64 undirected edges, (nodes + 1) u64 offsets, 2·edges u64 neighbors |
//! | checkpoint  | `SGM1`, u64 tensor count, count × (u64 rows, u64 cols), every tensor's f64 values in order |
//! | embeddings  | `SGE1`, u64 rows, u64 dim, rows·dim f64 |
//!
//! Checkpoints carry a JSON sidecar with the model configuration and task
//! list; embedding stores carry a JSON list of ids.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Model, ModelConfig, TaskSpec};
use crate::nn::Tensor2;

use super::bytes::ByteReader;

pub const FEATURE_MAGIC: &[u8; 4] = b"SGF1";
pub const GRAPH_MAGIC: &[u8; 4] = b"SGG1";
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SGM1";
pub const EMBEDDING_MAGIC: &[u8; 4] = b"SGE1";

const DTYPE_F32: u32 = 1;

/// Feature rows as stored on disk, keyed by record id.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureFile {
    pub ids: Vec<String>,
    /// Promoted from the stored f32 values.
    pub data: Tensor2,
}

pub fn write_features(path: &Path, ids: &[String], data: &Tensor2) -> Result<()> {
    if ids.len() != data.rows() {
        return Err(Error::invalid(format!("{} ids for {} rows", ids.len(), data.rows())));
    }
    let mut buf = Vec::with_capacity(24 + data.data().len() * 4);
    buf.extend_from_slice(FEATURE_MAGIC);
    buf.extend_from_slice(&(data.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(data.cols() as u64).to_le_bytes());
    buf.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for id in ids {
        buf.extend_from_slice(&(id.len() as u32).to_le_bytes());
        buf.extend_from_slice(id.as_bytes());
    }
    for &v in data.data() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<FeatureFile> {
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.magic(FEATURE_MAGIC)?;
    let rows = r.count("row count", 4)?;
    let dim = r.u64("dim")? as usize;
    let dtype = r.u32("dtype")?;
    if dtype != DTYPE_F32 {
        return Err(r.error(format!("unsupported dtype code {dtype}")));
    }
    let mut ids = Vec::with_capacity(rows);
    let mut seen = std::collections::HashSet::with_capacity(rows);
    for _ in 0..rows {
        let len = r.u32("id length")? as usize;
        let bytes = r.take(len, "id")?;
        let id = std::str::from_utf8(bytes)
            .map_err(|_| r.error("id is not UTF-8"))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(r.error(format!("duplicate id `{id}`")));
        }
        ids.push(id);
    }
    let n = rows.checked_mul(dim).ok_or_else(|| r.error("rows × dim overflows"))?;
    let values = r.f32s(n, "payload")?;
    r.finish()?;
    let data = Tensor2::from_vec(rows, dim, values.into_iter().map(f64::from).collect())?;
    Ok(FeatureFile { ids, data })
}

pub fn write_graph(path: &Path, g: &Graph) -> Result<()> {
    let mut buf = Vec::with_capacity(20 + 8 * (g.offsets().len() + g.neighbor_array().len()));
    buf.extend_from_slice(GRAPH_MAGIC);
    buf.extend_from_slice(&(g.node_count() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.edge_count() as u64).to_le_bytes());
    for &o in g.offsets() {
        buf.extend_from_slice(&(o as u64).to_le_bytes());
    }
    for &n in g.neighbor_array() {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.magic(GRAPH_MAGIC)?;
    let nodes = r.count("node count", 8)?;
    let edges = r.count("edge count", 16)?;
    let offsets = r.u64s(nodes + 1, "offsets")?;
    let neighbors = r.u64s(2 * edges, "neighbors")?;
    r.finish()?;
    Graph::from_csr(
        offsets.into_iter().map(|v| v as usize).collect(),
        neighbors.into_iter().map(|v| v as usize).collect(),
    )
    .map_err(|e| r.error(e.to_string()))
}

/// JSON sidecar written next to every checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub tasks: Vec<TaskSpec>,
    /// Free-form run settings (data paths, flags) supplied by the caller.
    #[serde(default)]
    pub run: serde_json::Value,
}

/// `model.sgm` → `model.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn save_checkpoint(path: &Path, model: &Model, run: serde_json::Value) -> Result<()> {
    let tensors = model.params.tensors();
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for t in &tensors {
        let (r, c) = t.shape();
        buf.extend_from_slice(&(r as u64).to_le_bytes());
        buf.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for t in &tensors {
        for &v in t.value.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    let meta = CheckpointMeta {
        model: model.config.clone(),
        tasks: model.tasks.clone(),
        run,
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, CheckpointMeta)> {
    let meta: CheckpointMeta = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let mut model = Model::new(meta.model.clone(), meta.tasks.clone(), 0)?;
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.magic(CHECKPOINT_MAGIC)?;
    let count = r.count("tensor count", 16)?;
    let expected: Vec<(usize, usize)> = model.params.tensors().iter().map(|t| t.shape()).collect();
    if count != expected.len() {
        return Err(r.error(format!("{count} tensors, configuration implies {}", expected.len())));
    }
    for (k, &(er, ec)) in expected.iter().enumerate() {
        let (rows, cols) = (r.u64("rows")? as usize, r.u64("cols")? as usize);
        if (rows, cols) != (er, ec) {
            return Err(r.error(format!("tensor {k} is {rows}x{cols}, expected {er}x{ec}")));
        }
    }
    for t in model.params.tensors_mut() {
        let values = r.f64s(t.len(), "weights")?;
        t.value.data_mut().copy_from_slice(&values);
    }
    r.finish()?;
    if !model.params.is_finite() {
        return Err(Error::invalid("checkpoint contains non-finite weights"));
    }
    Ok((model, meta))
}

/// `store.sge` → `store.ids.json`.
pub fn ids_path(path: &Path) -> PathBuf {
    path.with_extension("ids.json")
}

pub fn write_embeddings(path: &Path, ids: &[String], data: &Tensor2) -> Result<()> {
    if ids.len() != data.rows() {
        return Err(Error::invalid(format!("{} ids for {} rows", ids.len(), data.rows())));
    }
    let mut buf = Vec::with_capacity(20 + data.data().len() * 8);
    buf.extend_from_slice(EMBEDDING_MAGIC);
    buf.extend_from_slice(&(data.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(data.cols() as u64).to_le_bytes());
    for &v in data.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    fs::write(ids_path(path), serde_json::to_string(ids)? + "\n")?;
    Ok(())
}

pub fn load_embeddings(path: &Path) -> Result<(Vec<String>, Tensor2)> {
    let buf = fs::read(path)?;
    let mut r = ByteReader::new(&buf, path);
    r.magic(EMBEDDING_MAGIC)?;
    let rows = r.count("row count", 0)?;
    let dim = r.u64("dim")? as usize;
    let n = rows.checked_mul(dim).ok_or_else(|| r.error("rows × dim overflows"))?;
    let values = r.f64s(n, "payload")?;
    r.finish()?;
    let ids: Vec<String> = serde_json::from_slice(&fs::read(ids_path(path))?)?;
    if ids.len() != rows {
        return Err(Error::invalid(format!("{} ids for {rows} embedding rows", ids.len())));
    }
    Ok((ids, Tensor2::from_vec(rows, dim, values)?))
}
