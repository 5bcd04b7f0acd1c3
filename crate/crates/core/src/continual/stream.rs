use crate::data::LabeledDataset;
use crate::objective::ClassMask;
use crate::{Error, Result};

/// One task of a class-incremental stream.
#[derive(Clone, Debug)]
pub struct Task {
    pub classes: Vec<usize>,
    pub mask: ClassMask,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Tasks with disjoint class sets that together cover all `K` classes.
#[derive(Clone, Debug)]
pub struct TaskStream {
    tasks: Vec<Task>,
    class_count: usize,
}

impl TaskStream {
    /// Splits `train`/`test` by label into consecutive groups of
    /// `classes_per_task` classes taken from `order`.
    pub fn build(
        train: &LabeledDataset,
        test: &LabeledDataset,
        classes_per_task: usize,
        order: &[usize],
    ) -> Result<Self> {
        let k = train.class_count();
        if test.class_count() != k {
            return Err(Error::config("train and test splits disagree on the class count"));
        }
        if train.dim() != test.dim() {
            return Err(Error::config("train and test splits disagree on the input dimension"));
        }
        if classes_per_task == 0 || !k.is_multiple_of(classes_per_task) {
            return Err(Error::config(format!(
                "{k} classes cannot be split into tasks of {classes_per_task}"
            )));
        }
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..k).collect::<Vec<_>>() {
            return Err(Error::config(format!("class order {order:?} is not a permutation of 0..{k}")));
        }
        let tasks = order
            .chunks(classes_per_task)
            .map(|classes| {
                Ok(Task {
                    classes: classes.to_vec(),
                    mask: ClassMask::from_classes(k, classes)?,
                    train: train.subset(&train.indices_of(classes)),
                    test: test.subset(&test.indices_of(classes)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TaskStream {
            tasks,
            class_count: k,
        })
    }

    /// Classes in natural order: task 1 gets `0..classes_per_task`, and so on.
    pub fn natural(
        train: &LabeledDataset,
        test: &LabeledDataset,
        classes_per_task: usize,
    ) -> Result<Self> {
        let order: Vec<usize> = (0..train.class_count()).collect();
        TaskStream::build(train, test, classes_per_task, &order)
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.tasks[0].train.dim()
    }

    /// Classes of all tasks strictly before `task`.
    pub fn classes_before(&self, task: usize) -> Vec<usize> {
        self.tasks[..task]
            .iter()
            .flat_map(|t| t.classes.iter().copied())
            .collect()
    }
}
