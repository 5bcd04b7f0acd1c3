use serde::{Deserialize, Serialize};

use super::stream::TaskStream;
use crate::model::MlpParams;
use crate::objective::{masked_argmax, ClassMask};
use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Argmax over all classes; task identity unknown.
    ClassIl,
    /// Argmax over the sample's own task classes.
    TaskIl,
}

const EVAL_CHUNK: usize = 2000;

/// Per-task test accuracy of `model` under `mode`.
pub fn evaluate(model: &MlpParams, stream: &TaskStream, mode: EvalMode) -> Result<Vec<f64>> {
    let (class_il, task_il) = evaluate_both(model, stream)?;
    Ok(match mode {
        EvalMode::ClassIl => class_il,
        EvalMode::TaskIl => task_il,
    })
}

/// Class-IL and task-IL accuracies from a single pass over every test split.
pub fn evaluate_both(model: &MlpParams, stream: &TaskStream) -> Result<(Vec<f64>, Vec<f64>)> {
    let full = ClassMask::full(stream.class_count());
    let mut class_il = Vec::with_capacity(stream.len());
    let mut task_il = Vec::with_capacity(stream.len());
    for task in stream.tasks() {
        let n = task.test.len();
        let (mut hit_c, mut hit_t) = (0usize, 0usize);
        let mut start = 0;
        while start < n {
            let end = (start + EVAL_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let x = task.test.inputs().select_rows(&idx);
            let z = model.logits(&x)?;
            let truth = &task.test.labels()[start..end];
            hit_c += hits(&z, &full, truth)?;
            hit_t += hits(&z, &task.mask, truth)?;
            start = end;
        }
        let denom = n.max(1) as f64;
        class_il.push(hit_c as f64 / denom);
        task_il.push(hit_t as f64 / denom);
    }
    Ok((class_il, task_il))
}

fn hits(z: &Matrix, mask: &ClassMask, truth: &[usize]) -> Result<usize> {
    Ok(masked_argmax(z, mask)?
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count())
}

/// `rows[t][i]`: accuracy on task `i` after training through task `t`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccuracyMatrix {
    rows: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub avg_accuracy: f64,
    pub avg_forgetting: f64,
    /// False for single-task streams, where forgetting is reported as 0.
    pub forgetting_defined: bool,
}

impl AccuracyMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let t = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != t {
                return Err(Error::shape(
                    "accuracy matrix",
                    format!("row {i} has {} entries for {t} tasks", r.len()),
                ));
            }
            if r.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::config(format!("row {i} has an accuracy outside [0, 1]")));
            }
        }
        Ok(AccuracyMatrix { rows })
    }

    pub(crate) fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn tasks(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn get(&self, checkpoint: usize, task: usize) -> f64 {
        self.rows[checkpoint][task]
    }

    /// Average accuracy after the last task, and average forgetting
    /// `mean over i < T of (max_{t ≥ i} a[t][i] − a[T][i])`.
    ///
    /// # Panics
    ///
    /// If the matrix does not have one checkpoint row per task.
    pub fn metrics(&self) -> Metrics {
        let t = self.tasks();
        assert!(t > 0 && self.rows.len() == t, "metrics need a full T x T matrix");
        let last = &self.rows[t - 1];
        let avg_accuracy = last.iter().sum::<f64>() / t as f64;
        if t == 1 {
            return Metrics {
                avg_accuracy,
                avg_forgetting: 0.0,
                forgetting_defined: false,
            };
        }
        let forgetting: f64 = (0..t - 1)
            .map(|i| {
                let best = (i..t).map(|c| self.rows[c][i]).fold(f64::NEG_INFINITY, f64::max);
                best - last[i]
            })
            .sum();
        Metrics {
            avg_accuracy,
            avg_forgetting: forgetting / (t - 1) as f64,
            forgetting_defined: true,
        }
    }
}
