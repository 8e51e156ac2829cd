//! On-disk formats, manifest loading, split generation and the tag
//! vocabulary file.

mod bytes;
mod formats;
mod manifest;
mod splits;

use std::fs;
use std::path::Path;

pub use formats::{
    ids_path, load_checkpoint, load_embeddings, load_features, load_graph, save_checkpoint, sidecar_path,
    write_embeddings, write_features, write_graph, CheckpointMeta, FeatureFile, CHECKPOINT_MAGIC, EMBEDDING_MAGIC,
    FEATURE_MAGIC, GRAPH_MAGIC,
};
pub use manifest::{derive_timeframes, load_manifest, save_manifest, timeframe_label};
pub use splits::{make_splits, SplitAssignment, DEFAULT_FRACTIONS};

use crate::error::{Error, Result};
use crate::graph::RecordManifest;
use crate::model::{FeatureMatrix, TagVocab, UNKNOWN_TAG};

/// Loads a feature file and aligns its rows to the manifest by id.
pub fn load_feature_matrix(path: &Path, manifest: &RecordManifest) -> Result<FeatureMatrix> {
    let f = load_features(path)?;
    FeatureMatrix::keyed(manifest, &f.ids, f.data)
}

pub fn save_vocab(path: &Path, vocab: &TagVocab) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&vocab.tags)? + "\n")?;
    Ok(())
}

pub fn load_vocab(path: &Path) -> Result<TagVocab> {
    let tags: Vec<String> = serde_json::from_slice(&fs::read(path)?)?;
    if tags.last().map(String::as_str) != Some(UNKNOWN_TAG) {
        return Err(Error::invalid(format!(
            "{}: vocabulary must end with `{UNKNOWN_TAG}`",
            path.display()
        )));
    }
    Ok(TagVocab { tags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocab_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.json");
        let v = TagVocab {
            tags: vec!["horse".into(), UNKNOWN_TAG.into()],
        };
        save_vocab(&p, &v).unwrap();
        assert_eq!(load_vocab(&p).unwrap(), v);
        fs::write(&p, "[\"horse\"]").unwrap();
        assert!(load_vocab(&p).is_err());
    }
}
