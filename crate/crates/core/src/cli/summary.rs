use std::fmt::{self, Write as _};
use std::path::Path;

use super::results::{MeanStd, RunResult};
use super::read_result;
use crate::continual::Method;
use crate::{Error, Result};

/// One line of a summary table; metrics are percentages.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub buffer: usize,
    pub method: Method,
    pub seeds: usize,
    pub class_il_acc: MeanStd,
    pub task_il_acc: MeanStd,
    pub class_il_forget: MeanStd,
    pub task_il_forget: MeanStd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub rows: Vec<SummaryRow>,
}

fn pct(m: MeanStd) -> MeanStd {
    MeanStd {
        mean: 100.0 * m.mean,
        std: 100.0 * m.std,
    }
}

fn cell(m: MeanStd) -> String {
    format!("{:.2}±{:.2}", m.mean, m.std)
}

/// Groups results into rows sorted by (buffer, method).
///
/// Refuses results from different datasets.
pub fn summarize(results: &[RunResult]) -> Result<Summary> {
    let first = results
        .first()
        .ok_or_else(|| Error::config("nothing to summarize"))?;
    let dataset = first.config.dataset.clone();
    if let Some(other) = results.iter().find(|r| r.config.dataset != dataset) {
        return Err(Error::config(format!(
            "refusing to mix datasets '{dataset}' and '{}'",
            other.config.dataset
        )));
    }
    let mut rows: Vec<SummaryRow> = results
        .iter()
        .map(|r| SummaryRow {
            buffer: r.config.method.buffer_capacity,
            method: r.config.method.method,
            seeds: r.runs.len(),
            class_il_acc: pct(r.aggregate.class_il.avg_acc),
            task_il_acc: pct(r.aggregate.task_il.avg_acc),
            class_il_forget: pct(r.aggregate.class_il.avg_forget),
            task_il_forget: pct(r.aggregate.task_il.avg_forget),
        })
        .collect();
    rows.sort_by_key(|r| (r.buffer, r.method));
    Ok(Summary { dataset, rows })
}

pub fn summarize_files<P: AsRef<Path>>(paths: &[P]) -> Result<Summary> {
    let results = paths
        .iter()
        .map(|p| read_result(p.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    summarize(&results)
}

const HEADER: [&str; 7] = [
    "buffer", "method", "seeds", "class-IL acc", "task-IL acc", "class-IL fgt", "task-IL fgt",
];

impl SummaryRow {
    fn cells(&self) -> [String; 7] {
        [
            self.buffer.to_string(),
            self.method.to_string(),
            self.seeds.to_string(),
            cell(self.class_il_acc),
            cell(self.task_il_acc),
            cell(self.class_il_forget),
            cell(self.task_il_forget),
        ]
    }
}

impl Summary {
    /// CSV with the same rounding as the text table.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "buffer,method,seeds,class_il_acc_mean,class_il_acc_std,task_il_acc_mean,\
             task_il_acc_std,class_il_forget_mean,class_il_forget_std,task_il_forget_mean,\
             task_il_forget_std\n",
        );
        for r in &self.rows {
            let _ = write!(s, "{},{},{}", r.buffer, r.method, r.seeds);
            for m in [r.class_il_acc, r.task_il_acc, r.class_il_forget, r.task_il_forget] {
                let _ = write!(s, ",{:.2},{:.2}", m.mean, m.std);
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<[String; 7]> = self.rows.iter().map(SummaryRow::cells).collect();
        let mut width = HEADER.map(|h| h.chars().count());
        for row in &body {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        writeln!(f, "dataset: {}", self.dataset)?;
        let line = |f: &mut fmt::Formatter<'_>, cells: &[String]| -> fmt::Result {
            let padded: Vec<String> = cells
                .iter()
                .zip(width)
                .map(|(c, w)| format!("{c:>w$}", w = w))
                .collect();
            writeln!(f, "{}", padded.join("  "))
        };
        line(f, &HEADER.map(String::from))?;
        for row in &body {
            line(f, row)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::results::{Aggregate, ConfigEcho, ModeResult, SeedRun, SCHEMA_VERSION};
    use crate::continual::{AccuracyMatrix, MethodConfig};

    fn fake(method: Method, buffer: usize, dataset: &str, accs: &[f64]) -> RunResult {
        let runs: Vec<SeedRun> = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let m = ModeResult::from_matrix(AccuracyMatrix::from_rows(vec![vec![a]]).unwrap());
                SeedRun {
                    seed: i as u64,
                    class_il: m.clone(),
                    task_il: m,
                }
            })
            .collect();
        RunResult {
            schema: SCHEMA_VERSION,
            engine: "test".into(),
            config: ConfigEcho {
                dataset: dataset.into(),
                classes_per_task: 2,
                seeds: (0..accs.len() as u64).collect(),
                method: MethodConfig::defaults(method, buffer),
            },
            aggregate: Aggregate::of(&runs),
            runs,
            wall_clock_secs: 0.0,
        }
    }

    #[test]
    fn sorted_and_formatted() {
        let s = summarize(&[
            fake(Method::ErMr, 200, "mnist", &[0.8, 0.9]),
            fake(Method::Sgd, 0, "mnist", &[0.2]),
            fake(Method::Er, 200, "mnist", &[0.7]),
        ])
        .unwrap();
        let order: Vec<Method> = s.rows.iter().map(|r| r.method).collect();
        assert_eq!(order, [Method::Sgd, Method::Er, Method::ErMr]);
        let text = s.to_string();
        assert!(text.contains("85.00±7.07"), "{text}");
        let csv = s.to_csv();
        assert!(csv.lines().nth(3).unwrap().starts_with("200,ER_MR,2,85.00,7.07"));
    }

    #[test]
    fn mixed_datasets_rejected() {
        let r = summarize(&[
            fake(Method::Sgd, 0, "mnist", &[0.2]),
            fake(Method::Sgd, 0, "blobs", &[0.2]),
        ]);
        assert!(matches!(r, Err(Error::Config(_))));
        assert!(summarize(&[]).is_err());
    }
}
