use serde::{Deserialize, Serialize};

use crate::continual::{AccuracyMatrix, MethodConfig, RunOutcome};

pub const SCHEMA_VERSION: u32 = 1;

/// Contents of a results JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema: u32,
    pub engine: String,
    pub config: ConfigEcho,
    pub runs: Vec<SeedRun>,
    pub aggregate: Aggregate,
    pub wall_clock_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub classes_per_task: usize,
    pub seeds: Vec<u64>,
    #[serde(flatten)]
    pub method: MethodConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub class_il: ModeResult,
    pub task_il: ModeResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeResult {
    pub matrix: AccuracyMatrix,
    pub avg_acc: f64,
    pub avg_forget: f64,
}

impl ModeResult {
    pub fn from_matrix(matrix: AccuracyMatrix) -> Self {
        let m = matrix.metrics();
        ModeResult {
            matrix,
            avg_acc: m.avg_accuracy,
            avg_forget: m.avg_forgetting,
        }
    }
}

impl SeedRun {
    pub fn new(seed: u64, outcome: RunOutcome) -> Self {
        SeedRun {
            seed,
            class_il: ModeResult::from_matrix(outcome.class_il),
            task_il: ModeResult::from_matrix(outcome.task_il),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single seed.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeAggregate {
    pub avg_acc: MeanStd,
    pub avg_forget: MeanStd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub class_il: ModeAggregate,
    pub task_il: ModeAggregate,
}

impl Aggregate {
    pub fn of(runs: &[SeedRun]) -> Self {
        let mode = |pick: fn(&SeedRun) -> &ModeResult| {
            let acc: Vec<f64> = runs.iter().map(|r| pick(r).avg_acc).collect();
            let fgt: Vec<f64> = runs.iter().map(|r| pick(r).avg_forget).collect();
            ModeAggregate {
                avg_acc: MeanStd::of(&acc),
                avg_forget: MeanStd::of(&fgt),
            }
        };
        Aggregate {
            class_il: mode(|r| &r.class_il),
            task_il: mode(|r| &r.task_il),
        }
    }
}
