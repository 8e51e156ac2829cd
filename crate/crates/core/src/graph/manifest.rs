use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value substituted for a missing or empty categorical property.
pub const UNKNOWN_PROPERTY: &str = "__unknown__";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "valid" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::UnknownSplit(other.to_string())),
        }
    }
}

/// A task label as it appears in the manifest: a class name, a number
/// (e.g. a creation year), or a set of tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelValue {
    Number(f64),
    Text(String),
    Set(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: String,
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
    #[serde(default)]
    pub labels: BTreeMap<String, LabelValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl Record {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            properties: BTreeMap::new(),
            labels: BTreeMap::new(),
            split: None,
        }
    }

    pub fn with_property(mut self, key: &str, value: &str) -> Self {
        self.properties.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_label(mut self, task: &str, value: LabelValue) -> Self {
        self.labels.insert(task.to_string(), value);
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }

    /// The property value, or [`UNKNOWN_PROPERTY`] when absent or empty.
    pub fn property(&self, key: &str) -> &str {
        match self.properties.get(key) {
            Some(v) if !v.is_empty() => v,
            _ => UNKNOWN_PROPERTY,
        }
    }
}

/// Ordered collection of records; node `i` of every graph built from the
/// manifest is `records()[i]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordManifest {
    records: Vec<Record>,
    index: HashMap<String, usize>,
}

impl RecordManifest {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self { records, index })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, node: usize) -> &Record {
        &self.records[node]
    }

    pub fn node_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn split_of(&self, node: usize) -> Result<Split> {
        self.records[node].split.ok_or(Error::MissingSplit { node })
    }

    pub fn set_split(&mut self, node: usize, split: Split) {
        self.records[node].split = Some(split);
    }

    pub fn label_mut(&mut self, node: usize) -> &mut BTreeMap<String, LabelValue> {
        &mut self.records[node].labels
    }

    /// Nodes assigned to `split`, ascending.
    pub fn nodes_in(&self, split: Split) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.records[i].split == Some(split))
            .collect()
    }

    /// Dense integer codes for a categorical property, in order of first
    /// appearance. Missing values share the sentinel's code.
    pub fn property_codes(&self, key: &str) -> Vec<u32> {
        let mut codes: HashMap<&str, u32> = HashMap::new();
        self.records
            .iter()
            .map(|r| {
                let next = codes.len() as u32;
                *codes.entry(r.property(key)).or_insert(next)
            })
            .collect()
    }
}
