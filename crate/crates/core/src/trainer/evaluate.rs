use std::collections::BTreeMap;

use crate::error::Result;
use crate::metrics::{
    accuracy, cf1_of1, cs_curve, cumulative_score, mean_absolute_error, mean_average_precision, EvalReport, TaskReport,
    ThetaComparison,
};
use crate::model::{multitask_loss, Model, Predictions, Targets, Task};
use crate::nn::{sigmoid, Tensor2};

/// Threshold on sigmoid outputs for a positive tag decision.
pub const TAG_THRESHOLD: f64 = 0.5;

/// θ in years for the headline cumulative score.
pub const CS_THETA: f64 = 5.0;

/// Absolute errors in target units for a regression task, over labeled
/// nodes.
pub fn regression_errors(model: &Model, preds: &Predictions, task_idx: usize, task: &Task) -> Vec<f64> {
    let Targets::Value(values) = &task.targets else {
        return Vec::new();
    };
    preds
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(r, &node)| {
            values[node].map(|t| (model.denormalize(task_idx, preds.outputs[task_idx].get(r, 0)) - t).abs())
        })
        .collect()
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        )
        .0
}

/// Loss and per-task metrics for already computed predictions.
pub fn report(
    model: &Model,
    preds: &Predictions,
    tasks: &[Task],
    split: &str,
    cmp: ThetaComparison,
) -> Result<EvalReport> {
    let loss = multitask_loss(&preds.outputs, tasks, &preds.nodes)?;
    let mut out = BTreeMap::new();
    for (t, task) in tasks.iter().enumerate() {
        let output = &preds.outputs[t];
        let mut r = TaskReport {
            count: loss.per_task[t].count,
            loss: loss.per_task[t].loss,
            ..TaskReport::default()
        };
        let labeled: Vec<usize> = (0..preds.nodes.len())
            .filter(|&i| task.has_label(preds.nodes[i]))
            .collect();
        if !labeled.is_empty() {
            match &task.targets {
                Targets::Class(labels) => {
                    let pred: Vec<usize> = labeled.iter().map(|&i| argmax(output.row(i))).collect();
                    let truth: Vec<usize> = labeled.iter().map(|&i| labels[preds.nodes[i]].unwrap()).collect();
                    r.accuracy = Some(accuracy(&pred, &truth)?);
                }
                Targets::Value(values) => {
                    let pred: Vec<f64> = labeled
                        .iter()
                        .map(|&i| model.denormalize(t, output.get(i, 0)))
                        .collect();
                    let truth: Vec<f64> = labeled.iter().map(|&i| values[preds.nodes[i]].unwrap()).collect();
                    r.mae = Some(mean_absolute_error(&pred, &truth)?);
                    let errors = regression_errors(model, preds, t, task);
                    r.cs_at_5 = Some(cumulative_score(&errors, CS_THETA, cmp)?);
                    let thetas: Vec<f64> = (0..=50).map(f64::from).collect();
                    r.cs_curve = Some(cs_curve(&errors, &thetas, cmp)?);
                }
                Targets::Multi(sets) => {
                    let scores = output.gather_rows(&labeled).map(sigmoid);
                    let mut truth = Tensor2::zeros(labeled.len(), output.cols());
                    for (k, &i) in labeled.iter().enumerate() {
                        for &c in sets[preds.nodes[i]].as_ref().unwrap() {
                            truth.set(k, c, 1.0);
                        }
                    }
                    let f1 = cf1_of1(&scores, &truth, TAG_THRESHOLD)?;
                    r.cf1 = Some(f1.cf1);
                    r.of1 = Some(f1.of1);
                    r.per_class_f1 = Some(f1.per_class);
                    r.map = mean_average_precision(&scores, &truth).ok();
                }
            }
        }
        out.insert(task.spec.name.clone(), r);
    }
    Ok(EvalReport {
        split: split.to_string(),
        total_loss: loss.total,
        tasks: out,
    })
}
