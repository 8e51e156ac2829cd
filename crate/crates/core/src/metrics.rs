//! Evaluation measures for the classification, regression and multi-label
//! tasks.
//!
//! Accuracy and cumulative score are reported in percent; CF1, OF1 and mAP
//! as fractions in `[0, 1]`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor2;

/// Percentage of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(100.0 * hits as f64 / truth.len() as f64)
}

pub fn mean_absolute_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid("prediction/target length mismatch"));
    }
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / truth.len() as f64)
}

/// How an absolute error is compared against θ.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaComparison {
    /// `|e| < θ`
    #[default]
    Strict,
    /// `|e| ≤ θ`
    Inclusive,
}

/// `CS(θ) = N_θ / N × 100`, with `N_θ` the number of errors within θ.
pub fn cumulative_score(abs_errors: &[f64], theta: f64, cmp: ThetaComparison) -> Result<f64> {
    if abs_errors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let within = abs_errors
        .iter()
        .filter(|e| match cmp {
            ThetaComparison::Strict => e.abs() < theta,
            ThetaComparison::Inclusive => e.abs() <= theta,
        })
        .count();
    Ok(100.0 * within as f64 / abs_errors.len() as f64)
}

/// `(θ, CS(θ))` for each θ, computed from one sort of the errors.
pub fn cs_curve(abs_errors: &[f64], thetas: &[f64], cmp: ThetaComparison) -> Result<Vec<(f64, f64)>> {
    if abs_errors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sorted: Vec<f64> = abs_errors.iter().map(|e| e.abs()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(thetas
        .iter()
        .map(|&theta| {
            let within = match cmp {
                ThetaComparison::Strict => sorted.partition_point(|&e| e < theta),
                ThetaComparison::Inclusive => sorted.partition_point(|&e| e <= theta),
            };
            (theta, 100.0 * within as f64 / n)
        })
        .collect())
}

pub fn write_cs_curve_csv<W: Write>(mut w: W, curve: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "theta,cs")?;
    for (theta, cs) in curve {
        writeln!(w, "{theta},{cs}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    /// Mean of per-class F1 over classes with at least one positive.
    pub cf1: f64,
    /// F1 of the pooled TP/FP/FN counts.
    pub of1: f64,
    /// Per-class F1; `None` for classes absent from the ground truth.
    pub per_class: Vec<Option<f64>>,
}

fn check_multilabel(scores: &Tensor2, truth: &Tensor2) -> Result<()> {
    if scores.shape() != truth.shape() {
        return Err(Error::shape(
            "multilabel metric",
            format!("scores {:?} vs truth {:?}", scores.shape(), truth.shape()),
        ));
    }
    if scores.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// CF1 and OF1 with a positive decision at `score >= threshold`.
pub fn cf1_of1(scores: &Tensor2, truth: &Tensor2, threshold: f64) -> Result<F1Scores> {
    check_multilabel(scores, truth)?;
    let classes = scores.cols();
    let (mut tp, mut fp, mut fne) = (vec![0usize; classes], vec![0usize; classes], vec![0usize; classes]);
    let mut positives = vec![0usize; classes];
    for i in 0..scores.rows() {
        for c in 0..classes {
            let pred = scores.get(i, c) >= threshold;
            let actual = truth.get(i, c) > 0.5;
            positives[c] += actual as usize;
            match (pred, actual) {
                (true, true) => tp[c] += 1,
                (true, false) => fp[c] += 1,
                (false, true) => fne[c] += 1,
                (false, false) => {}
            }
        }
    }
    let f1 = |tp: usize, fp: usize, fne: usize| {
        let denom = 2 * tp + fp + fne;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let per_class: Vec<Option<f64>> = (0..classes)
        .map(|c| (positives[c] > 0).then(|| f1(tp[c], fp[c], fne[c])))
        .collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let cf1 = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    let of1 = f1(tp.iter().sum(), fp.iter().sum(), fne.iter().sum());
    Ok(F1Scores { cf1, of1, per_class })
}

/// Average precision of one ranking: mean of precision@k over the ranks
/// of the positives. Scores are ranked descending with ties broken by
/// ascending index. `None` if there are no positives.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if truth[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Mean of per-class average precision over classes with a positive.
pub fn mean_average_precision(scores: &Tensor2, truth: &Tensor2) -> Result<f64> {
    check_multilabel(scores, truth)?;
    let aps: Vec<f64> = (0..scores.cols())
        .filter_map(|c| {
            let s: Vec<f64> = (0..scores.rows()).map(|i| scores.get(i, c)).collect();
            let t: Vec<bool> = (0..scores.rows()).map(|i| truth.get(i, c) > 0.5).collect();
            average_precision(&s, &t)
        })
        .collect();
    if aps.is_empty() {
        return Err(Error::invalid("no class has a positive example"));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Metrics for one task. Fields not applicable to the task kind are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub count: usize,
    pub loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    /// Cumulative score at θ = 5 years.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_at_5: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs_curve: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cf1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub of1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_class_f1: Option<Vec<Option<f64>>>,
}

impl TaskReport {
    /// The score the task is primarily judged by, if any.
    pub fn headline(&self) -> Option<(&'static str, f64)> {
        self.accuracy
            .map(|v| ("acc", v))
            .or(self.mae.map(|v| ("mae", v)))
            .or(self.map.map(|v| ("map", v)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: String,
    pub total_loss: f64,
    pub tasks: BTreeMap<String, TaskReport>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 100.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 0, 0, 0]).unwrap(), 25.0);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn cumulative_score_examples() {
        let e = [1.0, 2.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0];
        assert_eq!(cumulative_score(&e, 5.0, ThetaComparison::Strict).unwrap(), 20.0);
        assert_eq!(
            cumulative_score(&e, f64::INFINITY, ThetaComparison::Strict).unwrap(),
            100.0
        );
        // strict vs inclusive at the boundary
        assert_eq!(cumulative_score(&[5.0], 5.0, ThetaComparison::Strict).unwrap(), 0.0);
        assert_eq!(
            cumulative_score(&[5.0], 5.0, ThetaComparison::Inclusive).unwrap(),
            100.0
        );
    }

    #[test]
    fn cs_curve_agrees_with_pointwise() {
        let e = [3.0, 0.0, 7.5, 12.0, 5.0, 5.0];
        let thetas: Vec<f64> = (0..15).map(f64::from).collect();
        for cmp in [ThetaComparison::Strict, ThetaComparison::Inclusive] {
            let curve = cs_curve(&e, &thetas, cmp).unwrap();
            for (theta, cs) in curve {
                assert_eq!(cs, cumulative_score(&e, theta, cmp).unwrap());
            }
        }
    }

    #[test]
    fn f1_perfect_and_all_negative() {
        let truth = Tensor2::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let perfect = cf1_of1(&truth, &truth, 0.5).unwrap();
        assert_eq!((perfect.cf1, perfect.of1), (1.0, 1.0));
        let none = cf1_of1(&Tensor2::zeros(3, 2), &truth, 0.5).unwrap();
        assert_eq!(none.of1, 0.0);
        assert_eq!(none.cf1, 0.0);
    }

    #[test]
    fn f1_skips_absent_classes() {
        let truth = Tensor2::from_rows(&[[1.0, 0.0], [1.0, 0.0]]);
        let scores = Tensor2::from_rows(&[[0.9, 0.9], [0.9, 0.1]]);
        let f = cf1_of1(&scores, &truth, 0.5).unwrap();
        assert_eq!(f.per_class, vec![Some(1.0), None]);
        assert_eq!(f.cf1, 1.0);
        // pooled: tp 2, fp 1
        assert!((f.of1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.5, 0.1], &[true, true, false]), Some(1.0));
        let ap = average_precision(&[0.9, 0.8, 0.7], &[false, true, true]).unwrap();
        assert!((ap - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((ap - 0.5833).abs() < 1e-4);
        assert_eq!(average_precision(&[0.1], &[false]), None);
        // ties keep index order
        assert_eq!(average_precision(&[0.5, 0.5], &[false, true]), Some(0.5));
    }
}
