//! Softmax, cross-entropy and their task-masked variants, plus the logit MSE
//! used for distillation.
//!
//! # Masking
//!
//! A [`ClassMask`] restricts the softmax to the classes of one task. Masked
//! classes are *excluded* from the normalizer and get probability exactly
//! `0.0`, so `p − y` is exactly zero in their columns and backpropagation never
//! reaches their output weights.
//!
//! The common trick of multiplying logits by a mask holding `-inf` is not used:
//! `-inf · z` is `+inf` whenever a logit is negative and `NaN` when it is zero,
//! which turns a masked class into the *winning* class or poisons the batch.
//! Excluding the indices gives the intended restricted softmax for every input.

use crate::{Error, Matrix, Result};

/// Which classes a task's softmax may put mass on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassMask {
    allowed: Vec<bool>,
}

impl ClassMask {
    pub fn new(allowed: Vec<bool>) -> Result<Self> {
        if !allowed.iter().any(|&a| a) {
            return Err(Error::config("a class mask must allow at least one class"));
        }
        Ok(ClassMask { allowed })
    }

    pub fn full(k: usize) -> Self {
        assert!(k > 0, "class count must be positive");
        ClassMask {
            allowed: vec![true; k],
        }
    }

    /// Mask over `k` classes allowing exactly `classes`.
    pub fn from_classes(k: usize, classes: &[usize]) -> Result<Self> {
        let mut allowed = vec![false; k];
        for &c in classes {
            if c >= k {
                return Err(Error::config(format!("class {c} out of range for {k} classes")));
            }
            allowed[c] = true;
        }
        ClassMask::new(allowed)
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    #[inline]
    pub fn allows(&self, class: usize) -> bool {
        self.allowed.get(class).copied().unwrap_or(false)
    }

    pub fn is_full(&self) -> bool {
        self.allowed.iter().all(|&a| a)
    }

    pub fn classes(&self) -> Vec<usize> {
        (0..self.allowed.len()).filter(|&j| self.allowed[j]).collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.allowed
    }
}

/// How per-sample losses are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Reduction {
    /// Batch mean; `logit_grad` rows are `(p − y) / batch`.
    #[default]
    Mean,
    /// Batch sum; `logit_grad` rows are the per-sample `p − y`.
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossOutput {
    /// Reduced loss in nats.
    pub loss: f64,
    pub probs: Matrix,
    pub logit_grad: Matrix,
}

pub fn softmax(z: &Matrix) -> Result<Matrix> {
    masked_softmax(z, &ClassMask::full(z.cols().max(1)))
}

/// Row-wise softmax over the allowed classes; masked entries are exactly `0.0`.
pub fn masked_softmax(z: &Matrix, mask: &ClassMask) -> Result<Matrix> {
    check_mask(z, mask, "masked_softmax")?;
    let mut out = Matrix::zeros(z.rows(), z.cols());
    for r in 0..z.rows() {
        let row = z.row(r);
        let (max, _) = masked_max(row, mask)?;
        let dst = out.row_mut(r);
        let mut sum = 0.0;
        for (j, (&v, d)) in row.iter().zip(dst.iter_mut()).enumerate() {
            if mask.allowed[j] {
                *d = (v - max).exp();
                sum += *d;
            }
        }
        for d in dst.iter_mut() {
            *d /= sum;
        }
    }
    Ok(out)
}

/// Cross-entropy over all classes, batch-mean.
pub fn ce(z: &Matrix, labels: &[usize]) -> Result<LossOutput> {
    ce_with(z, labels, Reduction::Mean)
}

pub fn ce_with(z: &Matrix, labels: &[usize], reduction: Reduction) -> Result<LossOutput> {
    masked_ce_with(z, labels, &ClassMask::full(z.cols().max(1)), reduction)
}

/// Cross-entropy of the masked softmax, batch-mean.
///
/// Every label must be an allowed class; a replay label leaking into a
/// current-task loss is reported as [`Error::LabelOutsideMask`].
pub fn masked_ce(z: &Matrix, labels: &[usize], mask: &ClassMask) -> Result<LossOutput> {
    masked_ce_with(z, labels, mask, Reduction::Mean)
}

pub fn masked_ce_with(
    z: &Matrix,
    labels: &[usize],
    mask: &ClassMask,
    reduction: Reduction,
) -> Result<LossOutput> {
    check_mask(z, mask, "masked_ce")?;
    if labels.len() != z.rows() {
        return Err(Error::shape(
            "masked_ce",
            format!("{} labels for {} rows", labels.len(), z.rows()),
        ));
    }
    for (row, &label) in labels.iter().enumerate() {
        if label >= z.cols() {
            return Err(Error::shape(
                "masked_ce",
                format!("label {label} in row {row} for {} classes", z.cols()),
            ));
        }
        if !mask.allows(label) {
            return Err(Error::LabelOutsideMask { row, label });
        }
    }

    let probs = masked_softmax(z, mask)?;
    let scale = match reduction {
        Reduction::Mean if z.rows() > 0 => 1.0 / z.rows() as f64,
        _ => 1.0,
    };
    let mut total = 0.0;
    let mut logit_grad = probs.clone();
    for (r, &label) in labels.iter().enumerate() {
        let row = z.row(r);
        // −log p_true = logsumexp(allowed) − z_true, stable even when p_true underflows
        let (max, _) = masked_max(row, mask)?;
        let sum: f64 = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| mask.allowed[j])
            .map(|(_, &v)| (v - max).exp())
            .sum();
        total += max + sum.ln() - row[label];

        let g = logit_grad.row_mut(r);
        g[label] -= 1.0;
        if scale != 1.0 {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
    Ok(LossOutput {
        loss: total * scale,
        probs,
        logit_grad,
    })
}

/// Mean squared error over every element, with its gradient `2(z − t)/(batch·K)`.
pub fn mse(z: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if z.shape() != target.shape() {
        return Err(Error::shape(
            "mse",
            format!("{:?} vs {:?}", z.shape(), target.shape()),
        ));
    }
    let n = (z.rows() * z.cols()) as f64;
    if n == 0.0 {
        return Ok((0.0, z.clone()));
    }
    let diff = z.sub(target)?;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

/// One-hot encoding of class indices as a `labels.len() x k` matrix.
pub fn one_hot(labels: &[usize], k: usize) -> Matrix {
    Matrix::from_fn(labels.len(), k, |r, c| if labels[r] == c { 1.0 } else { 0.0 })
}

/// Row-wise argmax over the allowed classes. Ties go to the lowest index.
pub fn masked_argmax(z: &Matrix, mask: &ClassMask) -> Result<Vec<usize>> {
    check_mask(z, mask, "masked_argmax")?;
    (0..z.rows())
        .map(|r| masked_max(z.row(r), mask).map(|(_, j)| j))
        .collect()
}

fn check_mask(z: &Matrix, mask: &ClassMask, op: &'static str) -> Result<()> {
    if mask.len() != z.cols() {
        return Err(Error::shape(
            op,
            format!("mask over {} classes for {} logits", mask.len(), z.cols()),
        ));
    }
    Ok(())
}

fn masked_max(row: &[f64], mask: &ClassMask) -> Result<(f64, usize)> {
    let mut best = (f64::NEG_INFINITY, usize::MAX);
    for (j, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite("logits"));
        }
        if mask.allowed[j] && v > best.0 {
            best = (v, j);
        }
    }
    Ok(best)
}
