use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabelValue, RecordManifest};
use crate::nn::Tensor2;

/// Name of the catch-all tag for records without any vocabulary tag.
pub const UNKNOWN_TAG: &str = "Unknown";

/// Per-node feature rows. Nodes may lack a row; asking for one is an error
/// that names the record id.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    node_ids: Vec<String>,
    row_of_node: Vec<Option<usize>>,
    data: Tensor2,
}

/// Which kind of features a lookup is for, for error reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureRole {
    Node,
    Visual,
}

impl FeatureMatrix {
    /// Rows already in manifest order.
    pub fn dense(manifest: &RecordManifest, data: Tensor2) -> Result<Self> {
        if data.rows() != manifest.len() {
            return Err(Error::shape(
                "FeatureMatrix::dense",
                format!("{} rows for {} records", data.rows(), manifest.len()),
            ));
        }
        Ok(Self {
            node_ids: manifest.records().iter().map(|r| r.id.clone()).collect(),
            row_of_node: (0..manifest.len()).map(Some).collect(),
            data,
        })
    }

    /// Rows keyed by record id (e.g. from a feature file). Every id must
    /// exist in the manifest and appear once.
    pub fn keyed(manifest: &RecordManifest, ids: &[String], data: Tensor2) -> Result<Self> {
        if ids.len() != data.rows() {
            return Err(Error::shape(
                "FeatureMatrix::keyed",
                format!("{} ids for {} rows", ids.len(), data.rows()),
            ));
        }
        let mut row_of_node = vec![None; manifest.len()];
        for (row, id) in ids.iter().enumerate() {
            let node = manifest.node_of(id).ok_or_else(|| Error::UnknownId(id.clone()))?;
            if row_of_node[node].replace(row).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            node_ids: manifest.records().iter().map(|r| r.id.clone()).collect(),
            row_of_node,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn node_count(&self) -> usize {
        self.row_of_node.len()
    }

    pub fn data(&self) -> &Tensor2 {
        &self.data
    }

    pub fn row(&self, node: usize) -> Option<&[f64]> {
        self.row_of_node[node].map(|r| self.data.row(r))
    }

    /// Rows for `nodes`, in order.
    pub fn gather(&self, nodes: &[usize], role: FeatureRole) -> Result<Tensor2> {
        let mut out = Tensor2::zeros(nodes.len(), self.dim());
        for (dst, &node) in nodes.iter().enumerate() {
            let row = self.row(node).ok_or_else(|| {
                let id = self.node_ids[node].clone();
                match role {
                    FeatureRole::Node => Error::MissingFeatures(id),
                    FeatureRole::Visual => Error::MissingVisual(id),
                }
            })?;
            out.row_mut(dst).copy_from_slice(row);
        }
        Ok(out)
    }
}

/// Tag vocabulary: frequent tags in sorted order, then [`UNKNOWN_TAG`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagVocab {
    pub tags: Vec<String>,
}

impl TagVocab {
    /// Keeps tags carried by more than `min_count` records.
    pub fn build(manifest: &RecordManifest, tags_key: &str, min_count: usize) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in manifest.records() {
            if let Some(LabelValue::Set(tags)) = r.labels.get(tags_key) {
                let mut seen: Vec<&str> = tags.iter().map(String::as_str).collect();
                seen.sort_unstable();
                seen.dedup();
                for t in seen {
                    *counts.entry(t).or_default() += 1;
                }
            }
        }
        let mut tags: Vec<String> = counts
            .into_iter()
            .filter(|&(t, c)| c > min_count && t != UNKNOWN_TAG)
            .map(|(t, _)| t.to_string())
            .collect();
        tags.push(UNKNOWN_TAG.to_string());
        Self { tags }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    fn unknown_index(&self) -> usize {
        self.tags.len() - 1
    }
}

/// Multi-hot tag features over `vocab`; records with no vocabulary tag get
/// only the `Unknown` bit.
pub fn bow_features(manifest: &RecordManifest, vocab: &TagVocab, tags_key: &str) -> Result<FeatureMatrix> {
    if vocab.tags.last().map(String::as_str) != Some(UNKNOWN_TAG) {
        return Err(Error::invalid("tag vocabulary must end with the Unknown tag"));
    }
    let index: HashMap<&str, usize> = vocab.tags[..vocab.unknown_index()]
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut data = Tensor2::zeros(manifest.len(), vocab.len());
    for (node, r) in manifest.records().iter().enumerate() {
        let row = data.row_mut(node);
        if let Some(LabelValue::Set(tags)) = r.labels.get(tags_key) {
            for t in tags {
                if let Some(&c) = index.get(t.as_str()) {
                    row[c] = 1.0;
                }
            }
        }
        if row.iter().all(|&v| v == 0.0) {
            row[vocab.unknown_index()] = 1.0;
        }
    }
    FeatureMatrix::dense(manifest, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Record;

    fn tagged(tags: &[&[&str]]) -> RecordManifest {
        RecordManifest::new(
            tags.iter()
                .enumerate()
                .map(|(i, ts)| {
                    let r = Record::new(format!("r{i}"));
                    if ts.is_empty() {
                        r
                    } else {
                        r.with_label("tags", LabelValue::Set(ts.iter().map(|s| s.to_string()).collect()))
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn multi_hot_encoding() {
        let m = tagged(&[&["a", "b"], &[], &["zzz"]]);
        let vocab = TagVocab {
            tags: vec!["a".into(), "b".into(), "c".into(), UNKNOWN_TAG.into()],
        };
        let f = bow_features(&m, &vocab, "tags").unwrap();
        assert_eq!(f.row(0).unwrap(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(f.row(1).unwrap(), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(f.row(2).unwrap(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn vocab_keeps_tags_above_threshold() {
        let mut rows: Vec<&[&str]> = Vec::new();
        rows.extend(std::iter::repeat_n(&["x", "y"][..], 11));
        rows.extend(std::iter::repeat_n(&["y", "z"][..], 5));
        let m = tagged(&rows);
        let v = TagVocab::build(&m, "tags", 10);
        assert_eq!(v.tags, vec!["x", "y", UNKNOWN_TAG]);
    }

    #[test]
    fn keyed_rows_and_missing_errors() {
        let m = tagged(&[&[], &[]]);
        let f = FeatureMatrix::keyed(&m, &["r1".to_string()], Tensor2::from_rows(&[[2.0, 3.0]])).unwrap();
        assert_eq!(f.row(1).unwrap(), &[2.0, 3.0]);
        let err = f.gather(&[0], FeatureRole::Visual).unwrap_err();
        assert!(matches!(err, Error::MissingVisual(id) if id == "r0"));
        assert!(FeatureMatrix::keyed(&m, &["nope".to_string()], Tensor2::zeros(1, 2)).is_err());
    }
}
