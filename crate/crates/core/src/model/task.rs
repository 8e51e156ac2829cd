use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LabelValue, RecordManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Multiclass,
    Regression,
    Multilabel,
}

/// One prediction head and its weight in the combined loss.
///
/// Regression heads predict a standardised value `z`; the reported
/// prediction is `offset + scale * z`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    pub output_dim: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classes: Vec<String>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TaskSpec {
    pub fn multiclass(name: &str, classes: Vec<String>, weight: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: TaskKind::Multiclass,
            output_dim: classes.len(),
            weight,
            classes,
            offset: 0.0,
            scale: 1.0,
        }
    }

    pub fn multilabel(name: &str, classes: Vec<String>, weight: f64) -> Self {
        Self {
            kind: TaskKind::Multilabel,
            ..Self::multiclass(name, classes, weight)
        }
    }

    pub fn regression(name: &str, offset: f64, scale: f64, weight: f64) -> Self {
        Self {
            name: name.to_string(),
            kind: TaskKind::Regression,
            output_dim: 1,
            weight,
            classes: Vec::new(),
            offset,
            scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::invalid(format!(
                "task `{}` weight must be positive, got {}",
                self.name, self.weight
            )));
        }
        if self.output_dim == 0 {
            return Err(Error::invalid(format!("task `{}` has no outputs", self.name)));
        }
        if self.kind == TaskKind::Regression && !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("task `{}` has a non-positive scale", self.name)));
        }
        Ok(())
    }

    /// Infers the task kind from the manifest labels stored under `name`:
    /// strings are classes, numbers are regression targets, lists are tag
    /// sets. Regression targets are standardised with statistics of
    /// `fit_nodes`.
    pub fn infer(manifest: &RecordManifest, name: &str, weight: f64, fit_nodes: &[usize]) -> Result<Self> {
        let mut kind = None;
        let mut classes = BTreeSet::new();
        for r in manifest.records() {
            let Some(v) = r.labels.get(name) else { continue };
            let k = match v {
                LabelValue::Text(c) => {
                    classes.insert(c.clone());
                    TaskKind::Multiclass
                }
                LabelValue::Number(_) => TaskKind::Regression,
                LabelValue::Set(tags) => {
                    classes.extend(tags.iter().cloned());
                    TaskKind::Multilabel
                }
            };
            if kind.replace(k).is_some_and(|prev| prev != k) {
                return Err(Error::invalid(format!("task `{name}` mixes label types")));
            }
        }
        let spec = match kind {
            None => return Err(Error::invalid(format!("no record carries a `{name}` label"))),
            Some(TaskKind::Multiclass) => Self::multiclass(name, classes.into_iter().collect(), weight),
            Some(TaskKind::Multilabel) => Self::multilabel(name, classes.into_iter().collect(), weight),
            Some(TaskKind::Regression) => {
                let values: Vec<f64> = fit_nodes
                    .iter()
                    .filter_map(|&i| match manifest.get(i).labels.get(name) {
                        Some(LabelValue::Number(v)) => Some(*v),
                        _ => None,
                    })
                    .collect();
                let (mean, std) = mean_std(&values);
                Self::regression(name, mean, if std > 0.0 { std } else { 1.0 }, weight)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 1.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-node ground truth for one task; `None` where the record has no label.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Class(Vec<Option<usize>>),
    Value(Vec<Option<f64>>),
    Multi(Vec<Option<Vec<usize>>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub spec: TaskSpec,
    pub targets: Targets,
}

impl Task {
    /// Resolves every record's label for `spec`. Class names outside
    /// `spec.classes` are treated as missing.
    pub fn from_manifest(manifest: &RecordManifest, spec: TaskSpec) -> Result<Self> {
        spec.validate()?;
        let index: HashMap<&str, usize> = spec.classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let labels = manifest.records().iter().map(|r| r.labels.get(&spec.name));
        let targets = match spec.kind {
            TaskKind::Multiclass => Targets::Class(
                labels
                    .map(|l| match l {
                        Some(LabelValue::Text(c)) => index.get(c.as_str()).copied(),
                        _ => None,
                    })
                    .collect(),
            ),
            TaskKind::Regression => Targets::Value(
                labels
                    .map(|l| match l {
                        Some(LabelValue::Number(v)) => Some(*v),
                        _ => None,
                    })
                    .collect(),
            ),
            TaskKind::Multilabel => Targets::Multi(
                labels
                    .map(|l| match l {
                        Some(LabelValue::Set(tags)) => {
                            Some(tags.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
                        }
                        _ => None,
                    })
                    .collect(),
            ),
        };
        Ok(Self { spec, targets })
    }

    pub fn has_label(&self, node: usize) -> bool {
        match &self.targets {
            Targets::Class(v) => v[node].is_some(),
            Targets::Value(v) => v[node].is_some(),
            Targets::Multi(v) => v[node].is_some(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Record;

    fn manifest() -> RecordManifest {
        RecordManifest::new(vec![
            Record::new("a")
                .with_label("style", LabelValue::Text("Cubism".into()))
                .with_label("date", LabelValue::Number(1910.0)),
            Record::new("b")
                .with_label("style", LabelValue::Text("Baroque".into()))
                .with_label("date", LabelValue::Number(1650.0))
                .with_label("tags", LabelValue::Set(vec!["sky".into()])),
            Record::new("c"),
        ])
        .unwrap()
    }

    #[test]
    fn infers_kinds() {
        let m = manifest();
        let style = TaskSpec::infer(&m, "style", 1.0, &[0, 1]).unwrap();
        assert_eq!(style.kind, TaskKind::Multiclass);
        assert_eq!(style.classes, vec!["Baroque", "Cubism"]);
        let date = TaskSpec::infer(&m, "date", 1.0, &[0, 1]).unwrap();
        assert_eq!(date.kind, TaskKind::Regression);
        assert_eq!(date.offset, 1780.0);
        assert_eq!(date.scale, 130.0);
        let tags = TaskSpec::infer(&m, "tags", 1.0, &[0]).unwrap();
        assert_eq!(tags.kind, TaskKind::Multilabel);
        assert!(TaskSpec::infer(&m, "artist", 1.0, &[0]).is_err());
    }

    #[test]
    fn missing_labels_are_none() {
        let m = manifest();
        let t = Task::from_manifest(&m, TaskSpec::infer(&m, "style", 1.0, &[]).unwrap()).unwrap();
        assert_eq!(t.targets, Targets::Class(vec![Some(1), Some(0), None]));
        assert!(!t.has_label(2));
    }

    #[test]
    fn weights_must_be_positive() {
        let spec = TaskSpec::multiclass("s", vec!["a".into()], 0.0);
        assert!(spec.validate().is_err());
    }
}
