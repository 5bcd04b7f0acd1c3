//! Class-incremental training: task streams, the method catalogue, the
//! training loop, evaluation and metrics.
//!
//! Per minibatch `(x, y)` of task `t` each method takes one SGD step on
//!
//! | method | objective |
//! |---|---|
//! | `SGD` | `CE(x, y)` |
//! | `SGD_MR` | `CE_t(x, y)` (softmax masked to task `t`) |
//! | `CFSGMF` | `CE_t(x, y) + w·CE(x_cls, y_cls)`, CFGM pseudo-samples of earlier classes |
//! | `ER` | `CE(x, y) + CE(x_b, y_b)` |
//! | `ER_MR` | `CE_t(x, y) + CE(x_b, y_b)` |
//! | `DERPP` | `CE(x, y) + α·MSE(z(x_b1), z_b1) + β·CE(x_b2, y_b2)` |
//! | `DERPP_MR` | `CE_t(x, y) + α·MSE(z(x_b1), z_b1) + β·CE(x_b2, y_b2)` |
//! | `JOINT` | `CE` on the union of all tasks |
//!
//! `(x_b, y_b, z_b)` are drawn from a reservoir buffer that receives every
//! current sample with the logits it produced.
//!
//! Average forgetting uses the max-over-checkpoints definition:
//! `mean over i < T of (max_{t ≥ i} a[t][i] − a[T][i])`.

mod eval;
mod method;
mod stream;
mod train;

pub use eval::{evaluate, evaluate_both, AccuracyMatrix, EvalMode, Metrics};
pub use method::{Method, MethodConfig, DEFAULT_CFGM_ALPHA, DEFAULT_CFGM_WEIGHT};
pub use stream::{Task, TaskStream};
pub use train::{composite_loss, Composite, Term, Trainer};

use crate::objective::ClassMask;
use crate::Result;

/// Accuracy matrices of one run, one per evaluation mode.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub class_il: AccuracyMatrix,
    pub task_il: AccuracyMatrix,
}

impl RunOutcome {
    pub fn get(&self, mode: EvalMode) -> &AccuracyMatrix {
        match mode {
            EvalMode::ClassIl => &self.class_il,
            EvalMode::TaskIl => &self.task_il,
        }
    }
}

/// Trains `cfg.method` over `stream` with `seed`, evaluating every task after each one.
pub fn run_stream(stream: &TaskStream, cfg: &MethodConfig, seed: u64) -> Result<RunOutcome> {
    run_stream_with(stream, cfg, seed, |_, _| {})
}

/// As [`run_stream`], calling `after_task(t, &trainer)` once task `t` is trained.
///
/// `JOINT` trains once on the union of every task; its single checkpoint is
/// reported for each row of the matrices, and the callback fires once.
pub fn run_stream_with(
    stream: &TaskStream,
    cfg: &MethodConfig,
    seed: u64,
    mut after_task: impl FnMut(usize, &Trainer),
) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut trainer = Trainer::new(cfg.clone(), stream.input_dim(), stream.class_count(), seed)?;
    let mut outcome = RunOutcome {
        class_il: AccuracyMatrix::new(),
        task_il: AccuracyMatrix::new(),
    };

    if cfg.method == Method::Joint {
        let joint = joint_task(stream)?;
        trainer.train_task(0, &joint)?;
        after_task(0, &trainer);
        let (c, t) = evaluate_both(trainer.model(), stream)?;
        for _ in 0..stream.len() {
            outcome.class_il.push(c.clone());
            outcome.task_il.push(t.clone());
        }
        return Ok(outcome);
    }

    for (i, task) in stream.tasks().iter().enumerate() {
        trainer.train_task(i, task)?;
        after_task(i, &trainer);
        let (c, t) = evaluate_both(trainer.model(), stream)?;
        outcome.class_il.push(c);
        outcome.task_il.push(t);
    }
    Ok(outcome)
}

fn joint_task(stream: &TaskStream) -> Result<Task> {
    let mut tasks = stream.tasks().iter();
    let first = tasks.next().expect("stream has at least one task");
    let (mut train, mut test) = (first.train.clone(), first.test.clone());
    for t in tasks {
        train = train.concat(&t.train)?;
        test = test.concat(&t.test)?;
    }
    let k = stream.class_count();
    Ok(Task {
        classes: (0..k).collect(),
        mask: ClassMask::full(k),
        train,
        test,
    })
}
