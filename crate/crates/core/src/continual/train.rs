use super::method::{Method, MethodConfig};
use super::stream::Task;
use crate::memory::{BufferEntry, ReplayBuffer};
use crate::model::{Gradients, MlpParams};
use crate::objective::{masked_ce, mse, ClassMask};
use crate::perturb::cfgm_batch;
use crate::{Error, Matrix, Result, Rng};

/// One weighted term of a training objective. Each term runs its own forward
/// pass; their gradients are summed.
#[derive(Clone, Debug)]
pub enum Term {
    /// Batch-mean cross-entropy, masked when `mask` is set.
    Ce {
        x: Matrix,
        y: Vec<usize>,
        mask: Option<ClassMask>,
        weight: f64,
    },
    /// Logit MSE against fixed targets, over the `columns` classes or all of them.
    Mse {
        x: Matrix,
        target: Matrix,
        columns: Option<ClassMask>,
        weight: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Composite {
    pub loss: f64,
    pub grads: Gradients,
    /// Logits of each term, in term order.
    pub logits: Vec<Matrix>,
}

/// Total weighted loss of `terms` and its gradient with respect to every parameter.
pub fn composite_loss(model: &MlpParams, terms: &[Term]) -> Result<Composite> {
    let mut loss = 0.0;
    let mut grads: Option<Gradients> = None;
    let mut logits = Vec::with_capacity(terms.len());
    for term in terms {
        let (x, weight) = match term {
            Term::Ce { x, weight, .. } | Term::Mse { x, weight, .. } => (x, *weight),
        };
        let trace = model.forward(x)?;
        let (l, mut g) = match term {
            Term::Ce { y, mask, .. } => {
                let full;
                let mask = match mask {
                    Some(m) => m,
                    None => {
                        full = ClassMask::full(model.class_count());
                        &full
                    }
                };
                let out = masked_ce(trace.logits(), y, mask)?;
                (out.loss, out.logit_grad)
            }
            Term::Mse { target, columns, .. } => column_mse(trace.logits(), target, columns.as_ref())?,
        };
        if weight != 1.0 {
            g = g.scale(weight);
        }
        loss += weight * l;
        let step = model.backward(&trace, &g)?;
        match grads.as_mut() {
            Some(acc) => acc.accumulate(1.0, &step)?,
            None => grads = Some(step),
        }
        logits.push(trace.into_logits());
    }
    let grads = grads.ok_or_else(|| Error::config("objective has no terms"))?;
    Ok(Composite { loss, grads, logits })
}

fn column_mse(z: &Matrix, target: &Matrix, columns: Option<&ClassMask>) -> Result<(f64, Matrix)> {
    let Some(cols) = columns.filter(|c| !c.is_full()) else {
        return mse(z, target);
    };
    if target.shape() != z.shape() || cols.len() != z.cols() {
        return Err(Error::shape("column_mse", format!("{:?} vs {:?}", z.shape(), target.shape())));
    }
    let keep = cols.classes();
    let pick = |m: &Matrix| Matrix::from_fn(m.rows(), keep.len(), |r, c| m.get(r, keep[c]));
    let (loss, g) = mse(&pick(z), &pick(target))?;
    let mut full = Matrix::zeros(z.rows(), z.cols());
    for r in 0..z.rows() {
        for (c, &j) in keep.iter().enumerate() {
            full.set(r, j, g.get(r, c));
        }
    }
    Ok((loss, full))
}

const STREAM_INIT: u64 = 1;
const STREAM_ORDER: u64 = 2;
const STREAM_REPLAY: u64 = 3;
const STREAM_CFGM: u64 = 4;

/// Mutable state of one run: model, replay memory and random streams.
///
/// Every source of randomness has its own stream derived from the run seed,
/// so adding or removing replay draws never changes the data order.
#[derive(Clone, Debug)]
pub struct Trainer {
    cfg: MethodConfig,
    model: MlpParams,
    buffer: ReplayBuffer,
    order_rng: Rng,
    replay_rng: Rng,
    cfgm_rng: Rng,
    next_task: usize,
    seen_classes: Vec<usize>,
}

impl Trainer {
    /// Fresh network of shape `input_dim → hidden… → class_count`.
    ///
    /// Does not enforce the method/buffer pairing of [`MethodConfig::validate`].
    pub fn new(cfg: MethodConfig, input_dim: usize, class_count: usize, seed: u64) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&cfg.hidden);
        dims.push(class_count);
        let model = MlpParams::init(&dims, &mut Rng::derive(seed, STREAM_INIT))?;
        Ok(Trainer {
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            cfg,
            model,
            order_rng: Rng::derive(seed, STREAM_ORDER),
            replay_rng: Rng::derive(seed, STREAM_REPLAY),
            cfgm_rng: Rng::derive(seed, STREAM_CFGM),
            next_task: 0,
            seen_classes: Vec::new(),
        })
    }

    pub fn model(&self) -> &MlpParams {
        &self.model
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn config(&self) -> &MethodConfig {
        &self.cfg
    }

    /// Index of the next task to train.
    pub fn next_task(&self) -> usize {
        self.next_task
    }

    /// Classes of every task trained so far.
    pub fn seen_classes(&self) -> &[usize] {
        &self.seen_classes
    }

    /// Runs `epochs_per_task` shuffled passes over the task's training split.
    pub fn train_task(&mut self, index: usize, task: &Task) -> Result<()> {
        if index != self.next_task {
            return Err(Error::Protocol {
                expected: self.next_task,
                got: index,
            });
        }
        let n = task.train.len();
        for _ in 0..self.cfg.epochs_per_task {
            let perm = self.order_rng.shuffle(n);
            for chunk in perm.chunks(self.cfg.batch_size) {
                let x = task.train.inputs().select_rows(chunk);
                let y: Vec<usize> = chunk.iter().map(|&i| task.train.labels()[i]).collect();
                self.step(&x, &y, index, &task.mask)?;
            }
        }
        for &c in &task.classes {
            if !self.seen_classes.contains(&c) {
                self.seen_classes.push(c);
            }
        }
        self.next_task += 1;
        Ok(())
    }

    /// Builds the method's objective for one minibatch of task `task_index`.
    pub fn terms(&mut self, x: &Matrix, y: &[usize], task_index: usize, mask: &ClassMask) -> Result<Vec<Term>> {
        let cfg = self.cfg.clone();
        let method = cfg.method;
        let mut terms = vec![Term::Ce {
            x: x.clone(),
            y: y.to_vec(),
            mask: method.masks_current().then(|| mask.clone()),
            weight: 1.0,
        }];

        if method == Method::Cfsgmf && task_index > 0 && !self.seen_classes.is_empty() {
            let (x_cls, targets) = cfgm_batch(
                &self.model,
                x,
                &self.seen_classes,
                &mut self.cfgm_rng,
                cfg.cfgm_alpha,
                cfg.cfgm_clip,
                cfg.cfgm_policy,
            )?;
            terms.push(Term::Ce {
                x: x_cls,
                y: targets,
                mask: None,
                weight: cfg.cfgm_weight,
            });
        }

        if method.uses_buffer() && !self.buffer.is_empty() {
            let seen = self.seen_mask(mask)?;
            let replay_mask = cfg.mask_replay.then(|| seen.clone());
            if method.is_derpp() {
                let (xb, _, zb) = self.draw(cfg.replay_batch_size)?;
                terms.push(Term::Mse {
                    x: xb,
                    target: zb,
                    columns: cfg.mask_distill.then(|| seen.clone()),
                    weight: cfg.derpp_alpha,
                });
                let (xb, yb, _) = self.draw(cfg.replay_batch_size)?;
                terms.push(Term::Ce {
                    x: xb,
                    y: yb,
                    mask: replay_mask,
                    weight: cfg.derpp_beta,
                });
            } else {
                let (xb, yb, _) = self.draw(cfg.replay_batch_size)?;
                terms.push(Term::Ce {
                    x: xb,
                    y: yb,
                    mask: replay_mask,
                    weight: 1.0,
                });
            }
        }
        Ok(terms)
    }

    /// One SGD step on the method's objective, then one reservoir offer per sample.
    pub fn step(&mut self, x: &Matrix, y: &[usize], task_index: usize, mask: &ClassMask) -> Result<f64> {
        let terms = self.terms(x, y, task_index, mask)?;
        let out = composite_loss(&self.model, &terms)?;
        self.model.sgd_step(&out.grads, self.cfg.lr)?;
        if self.cfg.method.uses_buffer() {
            let z = &out.logits[0];
            for (r, &label) in y.iter().enumerate() {
                let entry = BufferEntry {
                    x: x.row(r).to_vec(),
                    y: label,
                    z: z.row(r).to_vec(),
                    seen_task: task_index,
                };
                self.buffer.reservoir_add(entry, &mut self.replay_rng);
            }
        }
        Ok(out.loss)
    }

    fn seen_mask(&self, current: &ClassMask) -> Result<ClassMask> {
        let mut classes = self.seen_classes.clone();
        classes.extend(current.classes());
        ClassMask::from_classes(self.model.class_count(), &classes)
    }

    fn draw(&mut self, n: usize) -> Result<(Matrix, Vec<usize>, Matrix)> {
        let picked = self.buffer.sample(n, &mut self.replay_rng)?;
        let d = self.model.input_dim();
        let k = self.model.class_count();
        let mut xs = Vec::with_capacity(n * d);
        let mut zs = Vec::with_capacity(n * k);
        let mut ys = Vec::with_capacity(n);
        for e in picked {
            xs.extend_from_slice(&e.x);
            zs.extend_from_slice(&e.z);
            ys.push(e.y);
        }
        Ok((Matrix::from_vec(n, d, xs)?, ys, Matrix::from_vec(n, k, zs)?))
    }
}
